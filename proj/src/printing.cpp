#include "seqmarkov/printing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "seqmarkov/error.hpp"

namespace seqmarkov {

namespace {

constexpr std::size_t kLineWidth = 80;

// Display width of a UTF-8 string: continuation bytes do not count.
std::size_t width_of(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad_left(const std::string& s, std::size_t w) {
  const std::size_t n = width_of(s);
  return n >= w ? s : std::string(w - n, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  const std::size_t n = width_of(s);
  return n >= w ? s : s + std::string(w - n, ' ');
}

std::string printf_string(const char* fmt, int precision, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, precision, x);
  return buf;
}

// Significant digits (after dropping trailing zeros) and decimal exponent of
// x rounded to `digits` significant digits.
std::pair<int, int> significance(double x, int digits) {
  if (x == 0) return {1, 0};
  const std::string e = printf_string("%.*e", digits - 1, x);
  const auto epos = e.find('e');
  const int exponent = std::stoi(e.substr(epos + 1));
  std::string mantissa = e.substr(0, epos);
  mantissa.erase(std::remove(mantissa.begin(), mantissa.end(), '-'), mantissa.end());
  mantissa.erase(std::remove(mantissa.begin(), mantissa.end(), '.'), mantissa.end());
  while (mantissa.size() > 1 && mantissa.back() == '0') mantissa.pop_back();
  return {static_cast<int>(mantissa.size()), exponent};
}

std::string non_finite(double x) {
  if (std::isnan(x)) return "NaN";
  return x > 0 ? "Inf" : "-Inf";
}

}  // namespace

std::vector<std::string> format_common(const std::vector<double>& values, int digits) {
  int decimals = 0;
  int sig = 1;
  bool any_finite = false;
  for (const double x : values) {
    if (!std::isfinite(x)) continue;
    any_finite = true;
    const auto [s, e] = significance(x, digits);
    decimals = std::max(decimals, s - 1 - e);
    sig = std::max(sig, s);
  }
  std::vector<std::string> fixed;
  std::vector<std::string> sci;
  std::size_t fixed_width = 0;
  std::size_t sci_width = 0;
  for (const double x : values) {
    if (!std::isfinite(x)) {
      fixed.push_back(non_finite(x));
      sci.push_back(non_finite(x));
      continue;
    }
    fixed.push_back(printf_string("%.*f", decimals, x));
    sci.push_back(printf_string("%.*e", sig - 1, x));
    fixed_width = std::max(fixed_width, fixed.back().size());
    sci_width = std::max(sci_width, sci.back().size());
  }
  if (any_finite && fixed_width > sci_width) return sci;
  return fixed;
}

std::string format_number(double x, int digits) { return format_common({x}, digits).front(); }

void print_named_vector(std::ostream& out, const std::vector<std::string>& names,
                        const Eigen::VectorXd& values, int digits) {
  if (names.size() != static_cast<std::size_t>(values.size()))
    throw DimensionError("names and values differ in length");
  const auto text = format_common(std::vector<double>(values.data(), values.data() + values.size()),
                                  digits);
  std::size_t w = 0;
  for (std::size_t i = 0; i < names.size(); ++i)
    w = std::max({w, width_of(names[i]), width_of(text[i])});
  const std::size_t per_line = std::max<std::size_t>(1, kLineWidth / (w + 1));
  for (std::size_t start = 0; start < names.size(); start += per_line) {
    const std::size_t end = std::min(names.size(), start + per_line);
    for (std::size_t i = start; i < end; ++i) out << pad_left(names[i], w) << ' ';
    out << '\n';
    for (std::size_t i = start; i < end; ++i) out << pad_left(text[i], w) << ' ';
    out << '\n';
  }
}

void print_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& row_names,
                  const std::vector<std::string>& col_names, const std::string& row_title,
                  const std::string& col_title, int digits) {
  if (row_names.size() != static_cast<std::size_t>(m.rows()) ||
      col_names.size() != static_cast<std::size_t>(m.cols()))
    throw DimensionError("matrix names do not match its shape");
  const bool titled = !row_title.empty() || !col_title.empty();

  std::size_t name_width = 0;
  for (const auto& r : row_names) name_width = std::max(name_width, width_of(r));
  const std::size_t label_width =
      titled ? std::max(width_of(row_title), name_width + 2) : name_width;
  std::vector<std::string> labels;
  for (const auto& r : row_names)
    labels.push_back(pad_left(pad_right(r, name_width), label_width));

  std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(m.cols()));
  std::vector<std::size_t> widths(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Eigen::VectorXd col = m.col(c);
    auto& text = cells[static_cast<std::size_t>(c)];
    text = format_common(std::vector<double>(col.data(), col.data() + col.size()), digits);
    auto& w = widths[static_cast<std::size_t>(c)];
    w = width_of(col_names[static_cast<std::size_t>(c)]);
    for (const auto& t : text) w = std::max(w, width_of(t));
  }

  std::size_t start = 0;
  do {
    std::size_t end = start;
    std::size_t line = label_width;
    while (end < widths.size() && (end == start || line + 1 + widths[end] <= kLineWidth)) {
      line += 1 + widths[end];
      ++end;
    }
    if (titled) out << std::string(label_width, ' ') << col_title << '\n';
    out << pad_right(titled ? row_title : std::string(), label_width);
    for (std::size_t c = start; c < end; ++c) out << ' ' << pad_left(col_names[c], widths[c]);
    out << '\n';
    for (std::size_t r = 0; r < labels.size(); ++r) {
      out << labels[r];
      for (std::size_t c = start; c < end; ++c) out << ' ' << pad_left(cells[c][r], widths[c]);
      out << '\n';
    }
    start = end;
  } while (start < widths.size());
}

void print_model(std::ostream& out, const MarkovModel& m) {
  const auto& names = m.alphabet.symbols();
  out << "Initial probabilities :\n";
  print_named_vector(out, names, m.initial);
  out << "\nTransition probabilities :\n";
  print_matrix(out, m.transitions, names, names, "from", "to");
}

void print_model(std::ostream& out, const HiddenMarkovModel& h) {
  out << "Initial probabilities :\n";
  print_named_vector(out, h.state_labels, h.initial);
  out << "\nTransition probabilities :\n";
  print_matrix(out, h.transitions, h.state_labels, h.state_labels, "from", "to");
  out << "\nEmission probabilities :\n";
  print_matrix(out, h.emissions, h.state_labels, h.alphabet.symbols(), "state_names",
               "symbol_names");
}

void print_model(std::ostream& out, const MixtureModel& m) {
  for (std::size_t k = 0; k < m.n_clusters(); ++k) {
    out << "Cluster : " << m.cluster_labels[k] << "\n\n";
    if (m.kind == MixtureKind::mmm)
      print_model(out, to_markov_model(m.clusters[k]));
    else
      print_model(out, m.clusters[k]);
    out << '\n';
  }
  out << "Coefficients :\n";
  print_matrix(out, m.coefficients, m.design.columns, m.cluster_labels);
}

void print_summary(std::ostream& out, const MixtureSummary& s) {
  const auto k = s.cluster_labels.size();
  out << "Covariate effects :\n" << s.cluster_labels.front() << " is the reference.\n\n";
  std::size_t name_width = 0;
  for (const auto& c : s.design_columns) name_width = std::max(name_width, width_of(c));
  for (std::size_t c = 1; c < k; ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    const Eigen::VectorXd est = s.coefficients.col(cc);
    const Eigen::VectorXd se = s.standard_errors.col(cc);
    const auto est_text = format_common(std::vector<double>(est.data(), est.data() + est.size()));
    const auto se_text = format_common(std::vector<double>(se.data(), se.data() + se.size()));
    std::size_t w1 = width_of("Estimate") + 1;
    std::size_t w2 = width_of("Std. error") + 1;
    for (std::size_t j = 0; j < est_text.size(); ++j) {
      w1 = std::max(w1, width_of(est_text[j]));
      w2 = std::max(w2, width_of(se_text[j]));
    }
    out << s.cluster_labels[c] << " :\n";
    out << std::string(name_width, ' ') << ' ' << pad_left("Estimate", w1) << ' '
        << pad_left("Std. error", w2) << '\n';
    for (std::size_t j = 0; j < est_text.size(); ++j)
      out << pad_right(s.design_columns[j], name_width) << ' ' << pad_left(est_text[j], w1)
          << ' ' << pad_left(se_text[j], w2) << '\n';
    out << '\n';
  }
  out << "Log-likelihood: " << format_number(s.log_likelihood) << "   BIC: "
      << format_number(s.bic) << " \n\n";

  out << "Means of prior cluster probabilities :\n";
  print_named_vector(out, s.cluster_labels, s.prior_means);

  out << "\nMost probable clusters :\n";
  {
    const std::vector<std::string> rows{"count", "proportion"};
    const std::size_t label_width = width_of("proportion");
    std::vector<std::string> counts;
    std::vector<std::string> props;
    std::vector<std::size_t> widths;
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      counts.push_back(std::to_string(s.cluster_counts(cc)));
      props.push_back(format_number(s.cluster_proportions(cc), 3));
      widths.push_back(std::max({width_of(s.cluster_labels[c]), counts.back().size(),
                                 props.back().size()}));
    }
    out << std::string(label_width, ' ');
    for (std::size_t c = 0; c < k; ++c) out << "  " << pad_left(s.cluster_labels[c], widths[c]);
    out << '\n' << pad_right(rows[0], label_width);
    for (std::size_t c = 0; c < k; ++c) out << "  " << pad_left(counts[c], widths[c]);
    out << '\n' << pad_right(rows[1], label_width);
    for (std::size_t c = 0; c < k; ++c) out << "  " << pad_left(props[c], widths[c]);
    out << '\n';
  }

  out << "\nClassification table :\n"
         "Mean cluster probabilities (in columns) by the most probable cluster (rows)\n\n";
  print_matrix(out, s.classification, s.cluster_labels, s.cluster_labels);
}

void print_bic_table(std::ostream& out, std::vector<NamedScore> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const NamedScore& a, const NamedScore& b) { return a.score.bic < b.score.bic; });
  const std::vector<std::string> header{"model", "type", "logLik", "df", "nobs", "BIC"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : scores)
    rows.push_back({s.name, s.type, printf_string("%.*f", 3, s.score.log_likelihood),
                    std::to_string(s.score.free_parameters),
                    std::to_string(s.score.n_observations),
                    printf_string("%.*f", 3, s.score.bic)});
  std::vector<std::size_t> widths;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::size_t w = width_of(header[c]);
    for (const auto& r : rows) w = std::max(w, width_of(r[c]));
    widths.push_back(w);
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      out << (c < 2 ? pad_right(cells[c], widths[c]) : pad_left(cells[c], widths[c]));
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

}  // namespace seqmarkov
