#ifndef SEQMARKOV_SERIALIZE_HPP
#define SEQMARKOV_SERIALIZE_HPP

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "seqmarkov/estimation.hpp"
#include "seqmarkov/hmm.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "seqmarkov/modelselect.hpp"
#include "seqmarkov/procmine.hpp"
#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

// Keys keep insertion order so that output files are byte-stable.
using Json = nlohmann::ordered_json;

// Cell tokens in sequence JSON for the two missing kinds.
inline constexpr const char* kUnknownToken = "·";
inline constexpr const char* kPaddingToken = "%";

// Finite numbers as JSON numbers; infinities and NaN as "Inf", "-Inf", "NaN".
Json number_to_json(double x);
double number_from_json(const Json& j);

Json to_json(const Alphabet& a);
Alphabet alphabet_from_json(const Json& j);

Json to_json(const SequenceSet& s);
SequenceSet sequences_from_json(const Json& j);

Json to_json(const MarkovModel& m);
Json to_json(const HiddenMarkovModel& h);
Json to_json(const MixtureModel& m);

using AnyModel = std::variant<MarkovModel, HiddenMarkovModel, MixtureModel>;
// Dispatches on the "type" field: mm, hmm, mmm or mhmm.
AnyModel model_from_json(const Json& j);
MarkovModel markov_from_json(const Json& j);
HiddenMarkovModel hmm_from_json(const Json& j);
MixtureModel mixture_from_json(const Json& j);

Json to_json(const EMResult& r);
Json to_json(const FitReport& r);
Json to_json(const ModelScore& s);
Json to_json(const MixtureSummary& s);

Json to_json(const ProcessGraph& g);
ProcessGraph process_graph_from_json(const Json& j);
Json to_json(const DiffGraph& g);

Json read_json_file(const std::filesystem::path& path);
// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace seqmarkov

#endif  // SEQMARKOV_SERIALIZE_HPP
