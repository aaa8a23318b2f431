#include "sparsebm/text_format.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace sparsebm {

const std::vector<SectionedText::Row>& SectionedText::section(const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) throw ParseError("missing section [" + name + "] in " + kind);
  return it->second;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void parse_header(const std::string& line, SectionedText& out) {
  std::istringstream ss(line);
  std::string hash, tool, kind, version;
  if (!(ss >> hash >> tool >> kind >> version) || hash != "#" || tool != "sparsebm" ||
      version.size() < 2 || version[0] != 'v')
    throw ParseError("missing '# sparsebm <kind> v<N>' header", 1);
  out.kind = kind;
  out.version = parse_int(version.substr(1), 1);
}

}  // namespace

std::string peek_kind(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file");
  SectionedText t;
  parse_header(trim(line), t);
  return t.kind;
}

SectionedText read_sectioned_text(std::istream& in) {
  SectionedText out;
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file");
  ++line_no;
  parse_header(trim(line), out);
  std::vector<SectionedText::Row>* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("malformed section at line " + std::to_string(line_no), line_no);
      const std::string name = t.substr(1, t.size() - 2);
      if (out.sections.count(name))
        throw ParseError("duplicate section [" + name + "] at line " + std::to_string(line_no),
                         line_no);
      current = &out.sections[name];
      continue;
    }
    if (!current) throw ParseError("data before first section at line " + std::to_string(line_no), line_no);
    SectionedText::Row row{line_no, {}};
    std::istringstream ss(t);
    std::string field;
    while (ss >> field) row.fields.push_back(field);
    current->push_back(std::move(row));
  }
  return out;
}

void write_header(std::ostream& out, const std::string& kind, int version) {
  out << "# sparsebm " << kind << " v" << version << '\n';
}

int parse_int(const std::string& field, long line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("expected integer, got '" + field + "' at line " + std::to_string(line), line);
  return v;
}

double parse_real(const std::string& field, long line) {
  try {
    return parse_double(field);
  } catch (const ParseError&) {
    throw ParseError("expected number, got '" + field + "' at line " + std::to_string(line), line);
  }
}

VectorXd parse_vector_section(const std::vector<SectionedText::Row>& rows, Eigen::Index size,
                              const std::string& name) {
  if (static_cast<Eigen::Index>(rows.size()) != size)
    throw ParseError("section [" + name + "] has " + std::to_string(rows.size()) +
                     " rows, expected " + std::to_string(size));
  VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 1)
      throw ParseError("expected one value per row in [" + name + "] at line " +
                           std::to_string(r.line),
                       r.line);
    v[i] = parse_real(r.fields[0], r.line);
  }
  return v;
}

void write_vector_section(std::ostream& out, const std::string& name, const VectorXd& v) {
  out << '[' << name << "]\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

}  // namespace sparsebm
