#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "seqmarkov/cli.hpp"
#include "seqmarkov/serialize.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = SEQMARKOV_TEST_DATA "/table1.csv";
const std::string kCovariates = SEQMARKOV_TEST_DATA "/covariates.csv";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = seqmarkov::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "seqmarkov_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> data_args() {
  return {"--input", kData, "--seq-cols", "2-11", "--id-col", "id", "--alphabet", "L,H"};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("fit mm prints the chain and writes a model file") {
  const auto model = scratch("mm.json");
  const auto r = run(with({"fit", "--model", "mm", "--out", model.string()}, data_args()));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("   L 0.400 0.600\n   H 0.625 0.375\n") != std::string::npos);
  const auto j = seqmarkov::read_json_file(model);
  CHECK(j.at("format") == "seqmarkov-model");
  CHECK(j.at("provenance").at("config").at("seq-cols") == "2-11");
  CHECK(j.at("model").at("type") == "mm");
}

TEST_CASE("fits are byte-identical across worker counts") {
  const std::vector<std::vector<std::string>> configs{
      {"fit", "--model", "hmm", "--n-states", "2", "--restarts", "5", "--seed", "11"},
      {"fit", "--model", "mhmm", "--n-clusters", "2", "--n-states", "2", "--restarts", "3",
       "--seed", "12", "--covariates-file", kCovariates, "--covariates", "Sex"},
      {"fit", "--model", "hmm", "--n-states", "2", "--method", "direct", "--multistart", "3",
       "--seed", "13"}};
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::string model_ref, report_ref, out_ref;
    for (const std::string threads : {"1", "4", "16"}) {
      const auto model = scratch("det_model_" + threads + ".json");
      const auto report = scratch("det_report_" + threads + ".json");
      const auto r = run(with(with(configs[c], data_args()),
                              {"--threads", threads, "--out", model.string(), "--report",
                               report.string()}));
      REQUIRE(r.code == 0);
      // Output paths differ per run; compare everything but the provenance.
      auto m = seqmarkov::read_json_file(model);
      auto rep = seqmarkov::read_json_file(report);
      m.erase("provenance");
      rep.erase("provenance");
      if (threads == std::string("1")) {
        model_ref = m.dump();
        report_ref = rep.dump();
        out_ref = r.out;
      } else {
        CHECK(m.dump() == model_ref);
        CHECK(rep.dump() == report_ref);
        CHECK(r.out == out_ref);
      }
    }
  }
}

TEST_CASE("provenance omits the worker count") {
  const auto model = scratch("prov.json");
  const std::vector<std::string> base{"fit", "--model", "hmm", "--n-states", "2", "--seed", "3",
                                      "--out", model.string()};
  REQUIRE(run(with(base, data_args())).code == 0);
  const std::string reference = slurp(model);
  for (const std::string threads : {"1", "4", "16"}) {
    REQUIRE(run(with(with(base, data_args()), {"--threads", threads})).code == 0);
    CHECK(slurp(model) == reference);
  }
}

TEST_CASE("rerun reproduces a recorded fit") {
  const auto model = scratch("rerun_model.json");
  const auto first = run(with({"fit", "--model", "hmm", "--n-states", "2", "--restarts", "2",
                               "--seed", "21", "--out", model.string()},
                              data_args()));
  REQUIRE(first.code == 0);
  const std::string bytes = slurp(model);
  const auto again = run({"rerun", "--from", model.string(), "--threads", "4"});
  REQUIRE(again.code == 0);
  CHECK(again.out == first.out);
  CHECK(slurp(model) == bytes);
}

TEST_CASE("errors use one line with a class tag") {
  const auto missing = run({"trate", "--input", "/nonexistent/x.csv", "--seq-cols", "2-3"});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error[input_error]: ", 0) == 0);
  CHECK(missing.err.find('\n') == missing.err.size() - 1);

  const auto usage = run({"fit", "--model", "nope"});
  CHECK(usage.code == 2);
  CHECK(usage.err.rfind("error[usage_error]: ", 0) == 0);

  const auto seedless = run(with({"fit", "--model", "hmm", "--n-states", "2"}, data_args()));
  CHECK(seedless.code == 2);
  CHECK(seedless.err.find("--seed") != std::string::npos);

  const auto thresholds = run(with({"graph", "--cut", "0.1", "--minimum", "0.2"}, data_args()));
  CHECK(thresholds.code == 1);
  CHECK(thresholds.err.rfind("error[input_error]: ", 0) == 0);
}

TEST_CASE("graph, diff, paths, simulate and bic subcommands") {
  const auto g = run(with({"graph", "--group-col", "id"}, data_args()));
  REQUIRE(g.code == 0);
  CHECK(g.out.rfind("// provenance: ", 0) == 0);
  CHECK(g.out.find("digraph \"A\"") != std::string::npos);
  CHECK(g.out.find("digraph \"D\"") != std::string::npos);

  const auto d = run(with({"diff", "--group-col", "id", "--group-a", "A", "--group-b", "B",
                           "--format", "json"},
                          data_args()));
  REQUIRE(d.code == 0);
  const auto dj = seqmarkov::Json::parse(d.out);
  CHECK(dj.at("graph").at("title") == "B - A");

  const auto model = scratch("paths_model.json");
  REQUIRE(run(with({"fit", "--model", "hmm", "--n-states", "2", "--seed", "4", "--out",
                    model.string()},
                   data_args()))
              .code == 0);
  const auto p = run(with({"paths", "--model", model.string()}, data_args()));
  REQUIRE(p.code == 0);
  CHECK(p.out.find("\nid,log_probability,t1,") != std::string::npos);
  CHECK(p.out.find("\nD,") != std::string::npos);

  const auto sim = scratch("sim.csv");
  REQUIRE(run({"simulate", "--model", model.string(), "--n", "7", "--length", "5", "--seed", "2",
               "--out", sim.string()})
              .code == 0);
  const auto refit = run({"fit", "--model", "mm", "--input", sim.string(), "--seq-cols", "2-6",
                          "--id-col", "id", "--alphabet", "L,H"});
  CHECK(refit.code == 0);

  const auto mm = scratch("bic_mm.json");
  REQUIRE(run(with({"fit", "--model", "mm", "--out", mm.string()}, data_args())).code == 0);
  const auto b = run(with({"bic", "--models", mm.string() + "," + model.string()}, data_args()));
  REQUIRE(b.code == 0);
  CHECK(b.out.rfind("model", 0) == 0);
}

TEST_CASE("mixture fit and summary agree") {
  const auto model = scratch("mix.json");
  const auto fit = run(with({"fit", "--model", "mmm", "--n-clusters", "2", "--seed", "9",
                             "--restarts", "2", "--covariates-file", kCovariates, "--covariates",
                             "GPA", "--levels", "GPA=Low,Middle,High", "--intercept", "off",
                             "--cluster-labels", "One,Two", "--out", model.string()},
                            data_args()));
  REQUIRE(fit.code == 0);
  CHECK(fit.out.rfind("Covariate effects :\nOne is the reference.", 0) == 0);
  const auto summary = run(with({"summary", "--model", model.string(), "--covariates-file",
                                 kCovariates},
                                data_args()));
  REQUIRE(summary.code == 0);
  CHECK(summary.out == fit.out);
}
