#include <doctest.h>

#include <cmath>
#include <limits>

#include "seqmarkov/error.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "seqmarkov/procmine.hpp"
#include "seqmarkov/serialize.hpp"
#include "support.hpp"

using namespace seqmarkov;

TEST_CASE("non-finite numbers use string tokens") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(number_to_json(-inf) == "-Inf");
  CHECK(number_to_json(inf) == "Inf");
  CHECK(number_to_json(std::nan("")) == "NaN");
  CHECK(number_from_json(Json("-Inf")) == -inf);
  CHECK(std::isnan(number_from_json(Json("NaN"))));
  CHECK(number_from_json(Json(0.25)) == 0.25);
}

TEST_CASE("sequence sets round trip with unknown and padding cells") {
  const auto s = testing::make_set(testing::symbols(3), {{0, kUnknown, 2}, {1}, {2, 2, 2}});
  const auto back = sequences_from_json(to_json(s));
  CHECK(back.cells() == s.cells());
  CHECK(back.ids() == s.ids());
  CHECK(back.time_labels() == s.time_labels());
  CHECK(back.alphabet() == s.alphabet());
}

TEST_CASE("models round trip bit for bit") {
  Rng rng(41);
  const auto h = testing::random_hmm(3, 2, rng, false, true);
  const auto any = model_from_json(Json::parse(to_json(h).dump()));
  const auto& hb = std::get<HiddenMarkovModel>(any);
  CHECK(hb.transitions == h.transitions);
  CHECK(hb.emissions == h.emissions);
  CHECK(hb.initial == h.initial);
  CHECK(hb.state_labels == h.state_labels);

  const auto m = estimate_mm(testing::table1());
  const auto mb = markov_from_json(Json::parse(to_json(m).dump()));
  CHECK(mb.transitions == m.transitions);

  const CovariateFrame cov({"s1", "s2", "s3", "s4"}, {Factor{"G", {"a", "b"}, {0, 1, 0, 1}}});
  auto mix = make_mixture(MixtureKind::mhmm,
                          {testing::random_hmm(2, 2, rng), testing::random_hmm(3, 2, rng)},
                          make_design(cov, {"G"}, false));
  mix.coefficients(1, 1) = 0.123456789012345;
  mix.cluster_labels = {"first", "second"};
  const auto xb = mixture_from_json(Json::parse(to_json(mix).dump()));
  CHECK(xb.coefficients == mix.coefficients);
  CHECK(xb.cluster_labels == mix.cluster_labels);
  CHECK(xb.design.columns == mix.design.columns);
  CHECK(xb.design.intercept == false);
  CHECK(xb.clusters[1].emissions == mix.clusters[1].emissions);
  CHECK(xb.kind == MixtureKind::mhmm);
}

TEST_CASE("malformed model JSON is an input error") {
  Json j = to_json(estimate_mm(testing::table1()));
  j["transitions"] = Json::array({Json::array({0.5, 0.5})});
  CHECK_THROWS_AS(markov_from_json(j), Error);
  j["type"] = "other";
  CHECK_THROWS_AS(model_from_json(j), InputError);
}

TEST_CASE("process graph JSON round trip") {
  const auto g = build_process_graph(estimate_mm(testing::table1()), 0.5, 0.1);
  const auto back = process_graph_from_json(to_json(g));
  REQUIRE(back.edges.size() == g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(back.edges[i].probability == g.edges[i].probability);
    CHECK(back.edges[i].faded == g.edges[i].faded);
  }
  CHECK(back.cut == 0.5);
}
