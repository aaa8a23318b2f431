#include "sparsebm/perplexity.hpp"

#include <cmath>
#include <ostream>

#include "sparsebm/exact.hpp"

namespace sparsebm {

namespace {

template <typename Model, typename LogUnnorm>
PerplexityReport perplexity_impl(const Model& model, std::span<const Document> docs,
                                 const PerplexityOptions& options, LogUnnorm log_unnorm) {
  if (docs.empty()) throw ArgumentError("perplexity needs at least one document");
  PerplexityReport report;
  report.multinomial = options.include_multinomial;
  report.exact = options.exact;
  for (const auto& doc : docs) {
    if (doc.length() < 1) throw ArgumentError("perplexity documents must be non-empty");
    report.log_z.emplace(doc.length(), AisEstimate{});
  }
  for (auto& [length, est] : report.log_z) {
    if (options.exact) {
      est.length = length;
      est.log_z_mean = exact_log_z(model, length);
    } else {
      est = ais_log_z(model, length, options.ais);
    }
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < docs.size(); ++n) {
    const Document& doc = docs[n];
    double log_p = log_unnorm(model, doc) - report.log_z.at(doc.length()).log_z_mean;
    if (options.include_multinomial) {
      std::vector<int> counts;
      for (const auto& e : doc.entries()) counts.push_back(e.count);
      log_p += log_multinomial(counts);
    }
    const double per_word = log_p / doc.length();
    sum += per_word;
    report.docs.push_back({static_cast<int>(n), doc.length(), log_p, std::exp(-per_word)});
  }
  report.perplexity = std::exp(-sum / static_cast<double>(docs.size()));
  return report;
}

}  // namespace

PerplexityReport perplexity(const RsModel& model, std::span<const Document> docs,
                            const PerplexityOptions& options) {
  return perplexity_impl(model, docs, options, rs_log_unnormalized);
}

PerplexityReport perplexity(const SbmModel& model, std::span<const Document> docs,
                            const PerplexityOptions& options) {
  return perplexity_impl(model, docs, options, sbm_log_unnormalized);
}

void write_perplexity_report(std::ostream& out, const PerplexityReport& report) {
  out << "doc_id\tD\tlog_p\tper_word_ppl\n";
  for (const auto& d : report.docs)
    out << d.doc_id << '\t' << d.length << '\t' << format_double(d.log_p) << '\t'
        << format_double(d.per_word_perplexity) << '\n';
  out << "# perplexity\t" << format_double(report.perplexity) << '\n';
  out << "# documents\t" << report.docs.size() << '\n';
  out << "# multinomial\t" << (report.multinomial ? "on" : "off") << '\n';
  out << "# log_z\t" << (report.exact ? "exact" : "ais") << '\n';
  for (const auto& [length, est] : report.log_z) {
    out << "# log_z[D=" << length << "]\t" << format_double(est.log_z_mean);
    if (!report.exact)
      out << "\tstd_error\t" << format_double(est.std_error) << "\truns\t"
          << est.per_run_log_weights.size();
    out << '\n';
  }
}

}  // namespace sparsebm
