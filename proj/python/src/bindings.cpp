#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memrouter/config.hpp"
#include "memrouter/error.hpp"
#include "memrouter/metrics.hpp"
#include "memrouter/pipeline.hpp"
#include "memrouter/porter.hpp"
#include "memrouter/stats.hpp"
#include "memrouter/synthetic.hpp"

namespace py = pybind11;
using namespace memrouter;

namespace {

Category category_arg(const std::string& s) {
  const auto c = parse_category(s);
  if (!c) throw py::value_error("unknown category '" + s + "'");
  return *c;
}

RunConfig config_arg(const std::optional<std::string>& path) {
  return path ? RunConfig::load(*path) : RunConfig();
}

struct CorpusHandle {
  Corpus corpus;
};

struct Store {
  std::shared_ptr<const EmbeddingProvider> provider;
  std::shared_ptr<MemoryStore> store;
  std::vector<std::string> speakers;

  std::vector<std::pair<std::string, double>> search(const std::string& question,
                                                     const std::string& category, std::size_t k,
                                                     double lambda, std::size_t session_cap) const {
    RetrievalConfig cfg;
    cfg.k = k;
    cfg.lambda = lambda;
    cfg.session_cap = session_cap;
    const auto q = Query::from_text(question, category_arg(category), speakers);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : store->hybrid_rank(q, cfg)) out.emplace_back(s.item->turn_id, s.final_score);
    return out;
  }
};

Store ingest(const CorpusHandle& handle, std::size_t index, const std::string& policy_name,
             std::optional<double> budget, const std::optional<std::string>& config_path) {
  const auto& corpus = handle.corpus;
  if (index >= corpus.size()) throw py::index_error("conversation index out of range");
  const auto config = config_arg(config_path);
  const auto rt = Runtime::from_config(config);
  const auto policy = rt.make_policy(policy_name, config);
  py::gil_scoped_release release;
  IngestOptions opts;
  opts.budget = budget;
  auto r = ingest_conversation(corpus[index], *policy, rt.provider, opts);
  return {rt.provider, std::shared_ptr<MemoryStore>(std::move(r.store)), corpus[index].speakers()};
}

std::string evaluate(const std::string& config_path, const std::string& policy_name,
                     std::optional<double> budget, bool all) {
  const auto config = RunConfig::load(config_path);
  config.require_inputs({"paths.corpus"});
  py::gil_scoped_release release;
  const auto corpus = load_corpus(config.get("paths.corpus"));
  const auto split = apply_split(corpus, config.split(corpus));
  std::vector<const Conversation*> convs;
  if (all) {
    for (const auto& c : corpus) convs.push_back(&c);
  } else {
    convs = split.test;
  }
  const auto rt = Runtime::from_config(config);
  auto client = make_client(config.qa());
  const auto policy = rt.make_policy(policy_name, config, client);
  EvalOptions opts;
  opts.answer.retrieval = config.retrieval();
  opts.answer.max_inflight = config.qa().max_inflight;
  opts.report.resamples = static_cast<std::size_t>(config.get_u64("eval.resamples"));
  opts.report.seed = config.get_u64("eval.seed");
  opts.ingest.budget = budget;
  return report_json(run_pipeline(convs, *policy, *client, rt.provider, opts).report);
}

}  // namespace

PYBIND11_MODULE(_memrouter, m) {
  py::register_exception<Error>(m, "MemrouterError", PyExc_RuntimeError);

  m.def("version", &version_string);

  m.def("porter_stem", &porter_stem, py::arg("word"));
  m.def("normalize", &normalize, py::arg("text"));
  m.def("token_f1", &token_f1, py::arg("prediction"), py::arg("gold"));
  m.def(
      "category_score",
      [](const std::string& p, const std::string& g, const std::string& c) {
        return category_score(p, g, category_arg(c));
      },
      py::arg("prediction"), py::arg("gold"), py::arg("category"));

  m.def(
      "hash_embed",
      [](const std::string& text, std::size_t dim, std::uint64_t seed) {
        const auto e = hash_embed(text, dim, seed);
        return std::vector<float>(e.begin(), e.end());
      },
      py::arg("text"), py::arg("dim") = 256, py::arg("seed") = 42);

  m.def(
      "percentile", [](const std::vector<double>& v, double p) { return percentile(v, p); },
      py::arg("values"), py::arg("p"));
  m.def(
      "bootstrap_ci",
      [](const std::vector<double>& scores, std::size_t resamples, std::uint64_t seed) {
        const auto ci = bootstrap_ci(scores, resamples, seed);
        return py::make_tuple(ci.point, ci.lower, ci.upper);
      },
      py::arg("scores"), py::arg("resamples") = 10000, py::arg("seed") = 1);

  m.def(
      "budget_match",
      [](const std::vector<double>& values, double fraction) {
        std::vector<PolicyScore> scores;
        for (std::size_t i = 0; i < values.size(); ++i) {
          scores.push_back({"t" + std::to_string(i), i, values[i], "python", std::nullopt});
        }
        return budget_match(scores, fraction);
      },
      py::arg("scores"), py::arg("fraction"));

  m.def(
      "parameter_count",
      [](std::size_t d, std::size_t h, std::size_t model) {
        return parameter_count(RouterParams::zeros({d, h, model}));
      },
      py::arg("input"), py::arg("hidden"), py::arg("model"));

  m.def(
      "synth",
      [](const std::string& kind, const std::string& path, std::size_t conversations,
         std::uint64_t seed) {
        SyntheticData data;
        if (kind == "planted") {
          data = planted_fact_corpus({.conversations = conversations, .seed = seed});
        } else if (kind == "keyword") {
          data = keyword_corpus({.conversations = conversations, .seed = seed});
        } else {
          throw py::value_error("unknown synthetic kind '" + kind + "'");
        }
        write_corpus(path, data.corpus);
        return data.corpus.size();
      },
      py::arg("kind"), py::arg("path"), py::arg("conversations") = 10, py::arg("seed") = 1);

  py::class_<CorpusHandle>(m, "Corpus")
      .def_static(
          "load", [](const std::string& path) { return CorpusHandle{load_corpus(path)}; },
          py::arg("path"))
      .def("__len__", [](const CorpusHandle& c) { return c.corpus.size(); })
      .def_property_readonly("conversation_ids",
                             [](const CorpusHandle& c) {
                               std::vector<std::string> ids;
                               for (const auto& conv : c.corpus) ids.push_back(conv.conversation_id);
                               return ids;
                             })
      .def("turn_count", [](const CorpusHandle& c, std::size_t i) { return c.corpus.at(i).turn_count(); })
      .def("question_count",
           [](const CorpusHandle& c, std::size_t i) { return c.corpus.at(i).qa.size(); });

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init([](const std::optional<std::string>& path) { return config_arg(path); }),
           py::arg("path") = py::none())
      .def_static("parse", [](const std::string& text) { return RunConfig::parse(text); })
      .def("get", &RunConfig::get)
      .def("set", &RunConfig::set)
      .def("hash", &RunConfig::hash)
      .def("dump", &RunConfig::dump);

  py::class_<Store>(m, "Store")
      .def("__len__", [](const Store& s) { return s.store->size(); })
      .def("__contains__", [](const Store& s, const std::string& id) { return s.store->contains(id); })
      .def("search", &Store::search, py::arg("question"), py::arg("category") = "single_hop",
           py::arg("k") = 60, py::arg("lam") = 0.7, py::arg("session_cap") = 8)
      .def("persist", [](const Store& s, const std::string& path) { s.store->persist(path); });

  m.def("ingest", &ingest, py::arg("corpus"), py::arg("index"), py::arg("policy") = "store-all",
        py::arg("budget") = py::none(), py::arg("config") = py::none());
  m.def("evaluate_json", &evaluate, py::arg("config"), py::arg("policy"),
        py::arg("budget") = py::none(), py::arg("all") = false);
}
