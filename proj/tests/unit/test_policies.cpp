#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "memrouter/error.hpp"
#include "memrouter/policies.hpp"
#include "memrouter/synthetic.hpp"
#include "oracles.hpp"

using namespace memrouter;

namespace {

Conversation numbered_conversation(std::size_t n, const std::vector<std::string>& texts = {}) {
  Conversation conv;
  conv.conversation_id = "c";
  Session s{"s1", {2024, 1, 1, 9, 0}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    s.turns.push_back({"t" + std::to_string(i), i % 2 ? "B" : "A",
                       i < texts.size() ? texts[i] : "hello there " + std::to_string(i), "s1", i});
  }
  conv.sessions.push_back(s);
  return conv;
}

std::vector<std::size_t> selected_indices(const std::vector<bool>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::vector<PolicyScore> scores_of(const std::vector<double>& values) {
  std::vector<PolicyScore> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"t" + std::to_string(i), i, values[i], "test", std::nullopt});
  }
  return out;
}

struct Learned {
  std::shared_ptr<const RouterParams> params;
  std::shared_ptr<const EmbeddingProvider> provider;
};

Learned learned() {
  auto p = RouterParams::initialize({64, 16, 8}, 3);
  p.b_op(0, 0) = 0.1;
  return {std::make_shared<const RouterParams>(p), std::make_shared<HashEmbeddingProvider>(64, 42)};
}

}  // namespace

TEST_CASE("store-all scores every turn 1.0") {
  auto conv = numbered_conversation(17);
  StoreAllPolicy p;
  auto s = p.score(conv);
  REQUIRE(s.size() == 17);
  for (const auto& x : s) {
    CHECK(x.score == 1.0);
    CHECK(x.policy_name == "store-all");
  }
  auto mask = p.admit(s);
  CHECK(std::count(mask.begin(), mask.end(), true) == 17);
}

TEST_CASE("recent-k under a 62% budget keeps the suffix") {
  auto conv = numbered_conversation(10);
  RecentKPolicy p;
  auto mask = budget_match(p.score(conv), 0.62);
  CHECK(selected_indices(mask) == std::vector<std::size_t>{4, 5, 6, 7, 8, 9});
  RecentKPolicy three(3);
  CHECK(selected_indices(three.admit(three.score(conv))) == std::vector<std::size_t>{7, 8, 9});
}

TEST_CASE("keyword lexicon hits") {
  CHECK(keyword_hits("Let's meet on March 12") > keyword_hits("lol ok"));
  CHECK(keyword_hits("lol ok") == 0);
  CHECK(keyword_hits("Let's meet on March 12") == 2);
  CHECK(keyword_hits("I adopted a puppy on Friday in 2023") == 3);
  CHECK(keyword_hits("Planning a trip, I love my new job and got a promotion") == 5);
  CHECK(keyword_hits("birthday appointment bought moved started prefer favorite hate plan") == 9);
  auto conv = numbered_conversation(2, {"lol ok", "my birthday is in May"});
  KeywordPolicy p;
  auto s = p.score(conv);
  CHECK(s[0].score == 0.0);
  CHECK(s[1].score == 2.0);
  CHECK(selected_indices(p.admit(s)) == std::vector<std::size_t>{1});
}

TEST_CASE("random policy is seeded per conversation") {
  auto data = planted_fact_corpus({.conversations = 2});
  RandomPolicy a(7), b(7), c(8);
  auto sa = a.score(data.corpus[0]);
  auto sb = b.score(data.corpus[0]);
  auto sc = c.score(data.corpus[0]);
  auto other = a.score(data.corpus[1]);
  std::size_t same_seed = 0, diff_seed = 0, diff_conv = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].score >= 0.0);
    CHECK(sa[i].score < 1.0);
    same_seed += sa[i].score == sb[i].score;
    diff_seed += sa[i].score == sc[i].score;
    diff_conv += sa[i].score == other[i].score;
  }
  CHECK(same_seed == sa.size());
  CHECK(diff_seed == 0);
  CHECK(diff_conv == 0);
  CHECK(budget_match(sa, 0.45) == budget_match(sb, 0.45));
  CHECK(budget_match(sa, 0.45) != budget_match(sc, 0.45));
}

TEST_CASE("budget matching") {
  auto equal = scores_of(std::vector<double>(10, 0.3));
  CHECK(selected_indices(budget_match(equal, 0.62)) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(selected_indices(budget_match(equal, 1.0)).size() == 10);
  CHECK(budget_count(0.62, 10) == 6);
  CHECK(budget_count(0.25, 10) == 3);
  CHECK(budget_count(0.45, 10) == 5);
  CHECK(budget_count(0.15, 10) == 2);
  CHECK(budget_count(0.2, 588) == 118);
  auto mixed = scores_of({0.9, 0.1, 0.5, 0.5, 0.8, 0.5, 0.0, 0.7, 0.5, 0.2});
  CHECK(selected_indices(budget_match(mixed, 0.5)) == std::vector<std::size_t>{0, 2, 3, 4, 7});
}

TEST_CASE("budget fidelity for every policy") {
  auto data = planted_fact_corpus({.conversations = 20, .sessions = 3, .turns_per_session = 17});
  auto l = learned();
  std::vector<std::unique_ptr<Policy>> policies;
  policies.push_back(std::make_unique<StoreAllPolicy>());
  policies.push_back(std::make_unique<RandomPolicy>(7));
  policies.push_back(std::make_unique<RecentKPolicy>());
  policies.push_back(std::make_unique<KeywordPolicy>());
  policies.push_back(std::make_unique<MlpOnlyPolicy>(l.params, l.provider));
  policies.push_back(std::make_unique<RouterPolicy>(
      l.params, std::make_shared<MixerContextualizer>(8, 1234, 2), l.provider));
  for (const auto& p : policies) {
    for (const auto& conv : data.corpus) {
      auto s = p->score(conv);
      for (double t : {0.2, 0.45, 0.62, 0.8}) {
        auto mask = budget_match(s, t);
        auto sel = selected_indices(mask);
        CHECK(std::abs(double(sel.size()) - t * double(s.size())) <= 1.0);
        CHECK(sel == oracle::budget(s, t));
      }
    }
  }
}

TEST_CASE("mlp-only equals the router with an identity contextualizer") {
  auto data = planted_fact_corpus({.conversations = 1});
  auto l = learned();
  MlpOnlyPolicy mlp(l.params, l.provider);
  RouterPolicy router(l.params, std::make_shared<IdentityContextualizer>(8), l.provider);
  auto a = mlp.score(data.corpus[0]);
  auto b = router.score(data.corpus[0]);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
    CHECK(a[i].content_type == b[i].content_type);
  }
  RouterPolicy mixed(l.params, std::make_shared<MixerContextualizer>(8, 1234, 2), l.provider);
  auto c = mixed.score(data.corpus[0]);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i].score != c[i].score;
  CHECK(differ > 0);
}

TEST_CASE("learned policies record per-turn latency") {
  auto data = planted_fact_corpus({.conversations = 1});
  auto l = learned();
  RouterPolicy router(l.params, std::make_shared<MixerContextualizer>(8, 1234, 2), l.provider);
  LatencyCollector latency;
  router.score(data.corpus[0], &latency);
  CHECK(latency.size() == data.corpus[0].turn_count());
}

TEST_CASE("threshold sweeps are nested") {
  CHECK(parse_thresholds("0.1:0.9:0.1").size() == 9);
  CHECK(parse_thresholds("0.1:0.9:0.1")[8] == doctest::Approx(0.9));
  CHECK(parse_thresholds("0.2, 0.5,0.7") == std::vector<double>{0.2, 0.5, 0.7});
  auto data = planted_fact_corpus({.conversations = 3});
  auto l = learned();
  RouterPolicy router(l.params, std::make_shared<MixerContextualizer>(8, 1234, 2), l.provider);
  auto ts = parse_thresholds("0.1:0.9:0.1");
  for (const auto& conv : data.corpus) {
    auto s = router.score(conv);
    auto sweep = threshold_sweep(s, ts);
    REQUIRE(sweep.size() == 9);
    for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
      CHECK(sweep[i].store_fraction >= sweep[i + 1].store_fraction);
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (sweep[i + 1].selected[j]) CHECK(sweep[i].selected[j]);
      }
    }
    for (const auto& pt : sweep) {
      std::size_t n = 0;
      for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK(pt.selected[j] == (s[j].score >= pt.threshold));
        n += pt.selected[j];
      }
      CHECK(pt.store_fraction == doctest::Approx(double(n) / double(s.size())));
    }
  }
  auto low = scores_of({0.4, 0.6, 0.55});
  std::vector<double> one{0.3};
  CHECK(threshold_sweep(low, one)[0].store_fraction == 1.0);
  std::vector<double> bad{0.5, 0.5};
  CHECK_THROWS(threshold_sweep(low, bad));
  std::vector<double> outside{0.0, 0.5};
  CHECK_THROWS(threshold_sweep(low, outside));
}

TEST_CASE("factorial grid marginals") {
  FactorialGrid grid;
  grid.policies = {"random", "mlp-only", "keyword", "router", "store-all"};
  grid.retrievals = {"cosine", "hybrid"};
  grid.prompts = {"generic", "category"};
  for (const auto& p : grid.policies)
    for (const auto& r : grid.retrievals)
      for (const auto& q : grid.prompts) grid.cells[{p, r, q}] = 0.37;
  auto flat = grid.summarize();
  for (const auto* group : {&flat.policy, &flat.separate, &flat.retrieval, &flat.prompt})
    for (const auto& m : *group) CHECK(m.mean == doctest::Approx(0.37));

  // Hand-filled values: policy/retrieval/prompt cell values laid out row by row.
  const double v[5][2][2] = {{{20.1, 22.3}, {24.0, 25.2}},
                             {{28.4, 30.0}, {31.1, 33.5}},
                             {{26.0, 27.2}, {29.9, 30.4}},
                             {{35.0, 38.6}, {40.2, 44.1}},
                             {{45.3, 47.0}, {50.5, 52.0}}};
  for (int p = 0; p < 5; ++p)
    for (int r = 0; r < 2; ++r)
      for (int q = 0; q < 2; ++q) grid.cells[{grid.policies[p], grid.retrievals[r], grid.prompts[q]}] = v[p][r][q];
  auto sum = grid.summarize();
  REQUIRE(sum.policy.size() == 4);
  REQUIRE(sum.separate.size() == 1);
  CHECK(sum.separate[0].level == "store-all");
  CHECK(sum.separate[0].mean == doctest::Approx((45.3 + 47.0 + 50.5 + 52.0) / 4));
  CHECK(sum.policy[0].mean == doctest::Approx((20.1 + 22.3 + 24.0 + 25.2) / 4));
  CHECK(sum.policy[3].level == "router");
  CHECK(sum.policy[3].mean == doctest::Approx((35.0 + 38.6 + 40.2 + 44.1) / 4));
  CHECK(sum.retrieval[0].mean ==
        doctest::Approx((20.1 + 22.3 + 28.4 + 30.0 + 26.0 + 27.2 + 35.0 + 38.6 + 45.3 + 47.0) / 10));
  CHECK(sum.retrieval[1].mean ==
        doctest::Approx((24.0 + 25.2 + 31.1 + 33.5 + 29.9 + 30.4 + 40.2 + 44.1 + 50.5 + 52.0) / 10));
  CHECK(sum.prompt[1].mean ==
        doctest::Approx((22.3 + 25.2 + 30.0 + 33.5 + 27.2 + 30.4 + 38.6 + 44.1 + 47.0 + 52.0) / 10));
  CHECK(sum.missing.empty());

  grid.cells.erase({"keyword", "hybrid", "category"});
  auto partial = grid.summarize();
  REQUIRE(partial.missing.size() == 1);
  CHECK(partial.missing[0].policy == "keyword");
  CHECK(partial.policy[2].incomplete());
  CHECK(partial.policy[2].cells == 3);
  CHECK(partial.policy[2].mean == doctest::Approx((26.0 + 27.2 + 29.9) / 3));
  CHECK_FALSE(partial.policy[0].incomplete());
  CHECK(partial.prompt[1].incomplete());
}
