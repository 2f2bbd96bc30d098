#include <doctest.h>

#include <limits>
#include <sstream>

#include "seqmarkov/printing.hpp"
#include "support.hpp"

using namespace seqmarkov;

namespace {

const Alphabet kRoles({"Isolate", "Mediator", "Leader"});

}  // namespace

TEST_CASE("column formatting shares decimals") {
  CHECK(format_common({0.4231, 0.19, 0.0469}) == std::vector<std::string>{"0.4231", "0.1900", "0.0469"});
  CHECK(format_common({0.478, 0.563, 0.428}) == std::vector<std::string>{"0.478", "0.563", "0.428"});
  CHECK(format_number(-3614.627) == "-3614.627");
  CHECK(format_number(0.32, 3) == "0.32");
  CHECK(format_common({1e-143, 1.0}) == std::vector<std::string>{"1e-143", "1e+00"});
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-Inf");
}

TEST_CASE("Markov model print layout") {
  MarkovModel m;
  m.alphabet = kRoles;
  m.initial = Eigen::Vector3d(0.375, 0.355, 0.270);
  m.transitions.resize(3, 3);
  m.transitions << 0.4231, 0.4782, 0.0987, 0.1900, 0.5633, 0.2467, 0.0469, 0.4279, 0.5252;
  std::ostringstream out;
  print_model(out, m);
  CHECK(out.str() ==
        "Initial probabilities :\n"
        " Isolate Mediator   Leader \n"
        "   0.375    0.355    0.270 \n"
        "\n"
        "Transition probabilities :\n"
        "          to\n"
        "from       Isolate Mediator Leader\n"
        "  Isolate   0.4231    0.478 0.0987\n"
        "  Mediator  0.1900    0.563 0.2467\n"
        "  Leader    0.0469    0.428 0.5252\n");
}

TEST_CASE("hidden Markov model print layout") {
  HiddenMarkovModel h;
  h.alphabet = kRoles;
  h.state_labels = default_state_labels(2);
  h.initial = Eigen::Vector2d(0.657, 0.343);
  h.transitions.resize(2, 2);
  h.transitions << 0.9089, 0.0911, 0.0391, 0.9609;
  h.emissions.resize(2, 3);
  h.emissions << 0.4418, 0.5246, 0.0336, 0.0242, 0.4778, 0.4980;
  std::ostringstream out;
  print_model(out, h);
  CHECK(out.str() ==
        "Initial probabilities :\n"
        "State 1 State 2 \n"
        "  0.657   0.343 \n"
        "\n"
        "Transition probabilities :\n"
        "         to\n"
        "from      State 1 State 2\n"
        "  State 1  0.9089  0.0911\n"
        "  State 2  0.0391  0.9609\n"
        "\n"
        "Emission probabilities :\n"
        "           symbol_names\n"
        "state_names Isolate Mediator Leader\n"
        "    State 1  0.4418    0.525 0.0336\n"
        "    State 2  0.0242    0.478 0.4980\n");
}

TEST_CASE("mixture summary print layout") {
  MixtureSummary s;
  s.cluster_labels = {"Mainly leader", "Isolate/mediator", "Mediator/leader"};
  s.design_columns = {"GPALow", "GPAMiddle", "GPAHigh"};
  s.coefficients.resize(3, 3);
  s.coefficients << 0, 1.9221, 1.670, 0, 0.3901, 0.411, 0, -0.0451, -0.667;
  s.standard_errors.resize(3, 3);
  s.standard_errors << 0, 0.478, 0.487, 0, 0.314, 0.312, 0, 0.277, 0.332;
  s.log_likelihood = -3614.627;
  s.bic = 7461.487;
  s.prior_means = Eigen::Vector3d(0.244, 0.425, 0.331);
  s.cluster_counts = Eigen::Vector3i(49, 87, 64);
  s.cluster_proportions = Eigen::Vector3d(0.245, 0.435, 0.32);
  s.classification.resize(3, 3);
  s.classification << 0.91758, 0.00136, 0.0811, 0.00081, 0.89841, 0.1008, 0.05902, 0.10676,
      0.8342;
  s.classification_present = {true, true, true};
  std::ostringstream out;
  print_summary(out, s);
  CHECK(out.str() ==
        "Covariate effects :\n"
        "Mainly leader is the reference.\n"
        "\n"
        "Isolate/mediator :\n"
        "           Estimate  Std. error\n"
        "GPALow       1.9221       0.478\n"
        "GPAMiddle    0.3901       0.314\n"
        "GPAHigh     -0.0451       0.277\n"
        "\n"
        "Mediator/leader :\n"
        "           Estimate  Std. error\n"
        "GPALow        1.670       0.487\n"
        "GPAMiddle     0.411       0.312\n"
        "GPAHigh      -0.667       0.332\n"
        "\n"
        "Log-likelihood: -3614.627   BIC: 7461.487 \n"
        "\n"
        "Means of prior cluster probabilities :\n"
        "   Mainly leader Isolate/mediator  Mediator/leader \n"
        "           0.244            0.425            0.331 \n"
        "\n"
        "Most probable clusters :\n"
        "            Mainly leader  Isolate/mediator  Mediator/leader\n"
        "count                  49                87               64\n"
        "proportion          0.245             0.435             0.32\n"
        "\n"
        "Classification table :\n"
        "Mean cluster probabilities (in columns) by the most probable cluster (rows)\n"
        "\n"
        "                 Mainly leader Isolate/mediator Mediator/leader\n"
        "Mainly leader          0.91758          0.00136          0.0811\n"
        "Isolate/mediator       0.00081          0.89841          0.1008\n"
        "Mediator/leader        0.05902          0.10676          0.8342\n");
}

TEST_CASE("wide matrices wrap at 80 columns") {
  const std::size_t n = 12;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, static_cast<Eigen::Index>(n), 0.123456);
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < n; ++i) cols.push_back("column" + std::to_string(i));
  std::ostringstream out;
  print_matrix(out, m, {"r1", "r2"}, cols);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.size() <= 80);
    ++count;
  }
  CHECK(count == 6);
}

TEST_CASE("BIC table is sorted by BIC") {
  std::vector<NamedScore> scores{{"big", "hmm", {-10, 9, 100, 61.4}},
                                 {"small", "mm", {-12, 2, 100, 33.2}}};
  std::ostringstream out;
  print_bic_table(out, scores);
  CHECK(out.str() ==
        "model  type   logLik  df  nobs     BIC\n"
        "small  mm    -12.000   2   100  33.200\n"
        "big    hmm   -10.000   9   100  61.400\n");
}
