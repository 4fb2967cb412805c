#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memrouter/metrics.hpp"

namespace fixtures {

using memrouter::Category;
using Tokens = std::vector<std::string>;

inline const std::vector<std::string> kBm25Docs = {
    "I adopted a beagle named Max last spring",
    "We went hiking near the lake and saw a beagle",
    "My sister moved to Paris in March",
    "Pottery class on Friday was relaxing",
    "The quarterly budget review is next week",
    "I love playing guitar and guitar music",
    "Paris in the spring is lovely, said my sister",
    "Max the dog loves the lake",
    "Budget budget budget",
    "A short note"};

inline const std::vector<std::string> kBm25Queries = {
    "beagle",          "Max",           "Paris sister",      "budget",
    "guitar music",    "lake",          "spring",            "the",
    "a",               "Friday pottery", "budget review week", "dog lake Max",
    "march",           "nothing here",  "love loves",        "I",
    "sister sister",   "note",          "hiking beagle lake", "quarterly"};

// Full-algorithm outputs of the original Porter stemmer: the worked examples
// from the algorithm description followed by common conversational words.
inline const std::vector<std::pair<std::string, std::string>> kPorterPairs = {
    {"caresses", "caress"}, {"ponies", "poni"}, {"ties", "ti"}, {"caress", "caress"},
    {"cats", "cat"}, {"feed", "feed"}, {"agreed", "agre"}, {"plastered", "plaster"},
    {"bled", "bled"}, {"motoring", "motor"}, {"sing", "sing"}, {"conflated", "conflat"},
    {"troubled", "troubl"}, {"sized", "size"}, {"hopping", "hop"}, {"tanned", "tan"},
    {"falling", "fall"}, {"hissing", "hiss"}, {"fizzed", "fizz"}, {"failing", "fail"},
    {"filing", "file"}, {"happy", "happi"}, {"sky", "sky"}, {"relational", "relat"},
    {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"}, {"hesitanci", "hesit"},
    {"digitizer", "digit"}, {"conformabli", "conform"}, {"radicalli", "radic"}, {"differentli", "differ"},
    {"vileli", "vile"}, {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
    {"operator", "oper"}, {"feudalism", "feudal"}, {"decisiveness", "decis"}, {"hopefulness", "hope"},
    {"callousness", "callous"}, {"formaliti", "formal"}, {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"},
    {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"}, {"electriciti", "electr"},
    {"electrical", "electr"}, {"hopeful", "hope"}, {"goodness", "good"}, {"revival", "reviv"},
    {"allowance", "allow"}, {"inference", "infer"}, {"airliner", "airlin"}, {"gyroscopic", "gyroscop"},
    {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"}, {"replacement", "replac"},
    {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"}, {"homologou", "homolog"},
    {"communism", "commun"}, {"activate", "activ"}, {"angulariti", "angular"}, {"homologous", "homolog"},
    {"effective", "effect"}, {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"},
    {"cease", "ceas"}, {"controll", "control"}, {"roll", "roll"}, {"generalizations", "gener"},
    {"oscillators", "oscil"}, {"running", "run"}, {"jumped", "jump"}, {"jumping", "jump"},
    {"hiking", "hike"}, {"painted", "paint"}, {"adopted", "adopt"}, {"adopting", "adopt"},
    {"photography", "photographi"}, {"pottery", "potteri"}, {"camping", "camp"}, {"conversations", "convers"},
    {"connection", "connect"}, {"connected", "connect"}, {"connecting", "connect"}, {"connections", "connect"},
    {"agreement", "agreement"}, {"national", "nation"}, {"generous", "gener"}, {"happiness", "happi"},
    {"happily", "happili"}, {"organization", "organ"}, {"organizations", "organ"}, {"meeting", "meet"},
    {"meetings", "meet"}, {"meetly", "meetli"}, {"stating", "state"}, {"stated", "state"},
    {"states", "state"}, {"itemization", "item"}, {"sensational", "sensat"}, {"traditional", "tradit"},
    {"reference", "refer"}, {"references", "refer"}, {"differently", "differ"}, {"relativity", "rel"},
    {"activities", "activ"}, {"activity", "activ"}, {"daily", "daili"}, {"dogs", "dog"},
    {"swimming", "swim"}, {"swam", "swam"}, {"beautiful", "beauti"}, {"beautifully", "beautifulli"},
    {"university", "univers"}, {"universal", "univers"}, {"universe", "univers"}, {"probably", "probabl"},
    {"probability", "probabl"},
};

struct MetricCase {
  std::string prediction;
  std::string gold;
  std::optional<Category> category;  // unset: plain token_f1
  double expected;
};

inline const std::vector<MetricCase> kMetricCases = {
    {"pottery hiking", "pottery hiking", {}, 1.0},
    {"pottery hiking", "pottery hiking photography", {}, 0.8},
    {"cat", "dog", {}, 0.0},
    {"", "", {}, 1.0},
    {"", "x", {}, 0.0},
    {"x", "", {}, 0.0},
    {"the", "", {}, 1.0},
    {"dog dog cat", "dog cat cat", {}, 2.0 / 3.0},
    {"She adopted a dog", "adopting dogs", {}, 0.8},
    {"7 May 2023", "May 7, 2023", {}, 1.0},
    {"Paris", "paris.", {}, 1.0},
    {"running", "run", {}, 1.0},
    {"a b c d", "b", {}, 0.5},
    {"red blue green", "blue", {}, 0.5},
    {"blue", "red blue green", {}, 0.5},
    {"hiking, pottery", "pottery, hiking", Category::MultiHop, 1.0},
    {"yes", "yes; she said so", Category::OpenDomain, 1.0},
    {"a", "a, b, c", Category::MultiHop, 1.0 / 3.0},
    {"x", "x, y, z", Category::MultiHop, 1.0 / 3.0},
    {"painting and pottery", "pottery, camping, painting", Category::MultiHop, 4.0 / 9.0},
    {"the beach, forest, mountain", "beach, mountains", Category::MultiHop, 1.0},
    {"likely yes", "Likely yes; because she loves art", Category::OpenDomain, 1.0},
    {"No; definitely not", "no", Category::OpenDomain, 0.5},
    {"Sweden", "Sweden", Category::SingleHop, 1.0},
    {"7 May 2023", "The week before 9 June 2023", Category::Temporal, 0.25},
    {"pottery, hiking", "pottery hiking", Category::SingleHop, 1.0},
    {"pottery", "pottery hiking", Category::MultiHop, 2.0 / 3.0},
    {"", "a, b", Category::MultiHop, 0.5},
    {"blue", "blue", Category::OpenDomain, 1.0},
    {"x", ";x", Category::OpenDomain, 0.0},
    {"Luna, Max", "Max and Luna", Category::MultiHop, 2.0 / 3.0},
};

struct NormalizeCase {
  std::string input;
  Tokens expected;
};

inline const std::vector<NormalizeCase> kNormalizeCases = {
    {"The March 12, 2026.", {"march", "12", "2026"}},
    {"", {}},
    {"running and jumped", {"run", "jump"}},
    {"An apple a day", {"appl", "dai"}},
    {"Hello, World!", {"hello", "world"}},
    {"  multiple   spaces\tand\ttabs ", {"multipl", "space", "tab"}},
    {"Don't stop", {"dont", "stop"}},
    {"THE AND A AN", {}},
    {"theater andes", {"theater", "and"}},
};

}  // namespace fixtures
