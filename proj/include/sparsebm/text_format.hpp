#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sparsebm/common.hpp"

namespace sparsebm {

/// Sectioned text files used for models and structures:
///
///   # sparsebm <kind> v<version>
///   [section]
///   whitespace separated row
///   ...
///
/// Blank lines and lines starting with '#' after the header are ignored.
struct SectionedText {
  std::string kind;
  int version = 0;
  struct Row {
    long line = 0;
    std::vector<std::string> fields;
  };
  std::map<std::string, std::vector<Row>> sections;

  bool has(const std::string& name) const { return sections.count(name) != 0; }
  /// Throws ParseError when the section is missing.
  const std::vector<Row>& section(const std::string& name) const;
};

SectionedText read_sectioned_text(std::istream& in);
/// Reads only the header line; used to sniff file kinds.
std::string peek_kind(std::istream& in);

void write_header(std::ostream& out, const std::string& kind, int version);

int parse_int(const std::string& field, long line);
double parse_real(const std::string& field, long line);

/// Parses a section of one real per row.
VectorXd parse_vector_section(const std::vector<SectionedText::Row>& rows, Eigen::Index size,
                              const std::string& name);
void write_vector_section(std::ostream& out, const std::string& name, const VectorXd& v);

}  // namespace sparsebm
