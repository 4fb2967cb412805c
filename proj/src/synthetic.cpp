#include "memrouter/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>

#include "memrouter/rng.hpp"

namespace memrouter {

namespace {

constexpr std::array<std::string_view, 16> kFirstNames = {
    "Ana",   "Ben",  "Caroline", "Melanie", "Dario", "Elena", "Farid", "Greta",
    "Hiro",  "Ines", "Jonas",    "Keiko",   "Luca",  "Maya",  "Nils",  "Olga"};
constexpr std::array<std::string_view, 20> kPetNames = {
    "Rocket", "Biscuit", "Pepper", "Mochi", "Juniper", "Waffles", "Ziggy", "Clementine",
    "Nugget", "Marble",  "Pickle", "Tofu",  "Sprout",  "Basil",   "Olive", "Pixel",
    "Hazel",  "Comet",   "Maple",  "Domino"};
constexpr std::array<std::string_view, 12> kAnimals = {
    "beagle", "parrot", "kitten", "hamster", "tortoise", "ferret",
    "rabbit", "corgi",  "gecko",  "goldfish", "poodle",  "cockatiel"};
constexpr std::array<std::string_view, 10> kRelatives = {
    "sister", "brother", "cousin", "aunt", "uncle", "niece", "nephew", "grandmother", "roommate",
    "godfather"};
constexpr std::array<std::string_view, 16> kCities = {
    "Lisbon", "Denver",  "Osaka",   "Toronto", "Nairobi", "Krakow", "Seville", "Melbourne",
    "Boston", "Hamburg", "Santiago", "Dublin", "Chicago", "Valencia", "Oslo",  "Austin"};
constexpr std::array<std::string_view, 8> kFoodKinds = {
    "soup", "dessert", "sandwich", "noodle dish", "pastry", "curry", "salad", "pizza"};
constexpr std::array<std::string_view, 16> kDishes = {
    "pumpkin ramen", "lemon tart",    "banh mi",       "pad see ew",   "almond croissant",
    "green curry",   "fattoush",      "margherita",    "miso broth",   "tiramisu",
    "reuben",        "dan dan noodles", "cinnamon roll", "tikka masala", "caesar salad",
    "lentil stew"};
constexpr std::array<std::string_view, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};
constexpr std::array<std::string_view, 7> kWeekdays = {
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};
constexpr std::array<std::string_view, 10> kActivities = {
    "swimming laps", "rock climbing", "pottery class", "choir practice", "trail running",
    "yoga",          "chess club",    "salsa lessons", "archery",        "rowing"};
constexpr std::array<std::string_view, 8> kEmotions = {
    "thrilled", "heartbroken", "anxious", "relieved", "proud", "furious", "grateful", "nervous"};
constexpr std::array<std::string_view, 10> kEvents = {
    "surgery",   "wedding",  "graduation", "lawsuit", "audition",
    "marathon",  "eviction", "scholarship", "recital", "retirement"};

constexpr std::array<std::string_view, 24> kFillerA = {
    "haha yeah",   "oh nice",       "lol ok",          "honestly",     "mm hmm",
    "wow",         "ah I see",      "right right",     "yeah totally", "oh really",
    "hey",         "good morning",  "hi again",        "ok cool",      "true",
    "ha",          "sure thing",    "no way",          "aww",          "well",
    "hmm",         "oh man",        "yep",             "fair enough"};
constexpr std::array<std::string_view, 24> kFillerB = {
    "that sounds fun",        "how are you doing",        "not much going on here",
    "talk to you later",      "that is so cool",          "tell me more",
    "I see what you mean",    "same here honestly",       "it has been a slow day",
    "I was just thinking that", "anyway how is everything", "glad to hear it",
    "that makes sense",       "I can imagine",            "what a week it has been",
    "you always say that",    "we should catch up soon",  "it is pretty quiet today",
    "I am just relaxing",     "nothing new to report",    "sounds like a plan to me",
    "I get that completely",  "that is hilarious",        "good to know"};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& a) {
  return std::string(a[rng.index(N)]);
}

// Draws without replacement from a pool; empty when exhausted.
template <std::size_t N>
class Pool {
 public:
  Pool(const std::array<std::string_view, N>& items, Rng& rng) : items_(items.begin(), items.end()) {
    for (std::size_t i = items_.size(); i > 1; --i) std::swap(items_[i - 1], items_[rng.index(i)]);
  }
  bool empty() const { return items_.empty(); }
  std::string take() {
    std::string s(items_.back());
    items_.pop_back();
    return s;
  }

 private:
  std::vector<std::string_view> items_;
};

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

DateTime add_days(DateTime d, int days) {
  d.day += days;
  while (d.day > days_in_month(d.year, d.month)) {
    d.day -= days_in_month(d.year, d.month);
    if (++d.month > 12) {
      d.month = 1;
      ++d.year;
    }
  }
  return d;
}

std::vector<DateTime> session_times(Rng& rng, std::size_t n) {
  std::vector<DateTime> out;
  DateTime d{2026, 1, 5, 10, 0};
  for (std::size_t i = 0; i < n; ++i) {
    d = add_days(d, i == 0 ? 0 : 2 + static_cast<int>(rng.index(8)));
    d.hour = 8 + static_cast<int>(rng.index(12));
    d.minute = static_cast<int>(rng.index(12)) * 5;
    out.push_back(d);
  }
  return out;
}

std::string filler(Rng& rng) {
  std::string s = pick(rng, kFillerA) + ", " + pick(rng, kFillerB);
  if (rng.uniform() < 0.3) s += ". " + pick(rng, kFillerB);
  return s;
}

std::string fmt_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return prefix + buf;
}

struct Fact {
  std::string text;
  ContentType type;
  QAPair qa;
};

// Fact generators keyed on the owning speaker. Each one consumes unique slot
// values so every question has a single supporting turn.
struct FactFactory {
  Rng& rng;
  Pool<kAnimals.size()> animals;
  Pool<kPetNames.size()> pets;
  Pool<kRelatives.size()> relatives;
  Pool<kCities.size()> cities;
  Pool<kFoodKinds.size()> foods;
  Pool<kDishes.size()> dishes;
  Pool<kWeekdays.size()> weekdays;
  Pool<kEvents.size()> events;

  explicit FactFactory(Rng& r)
      : rng(r),
        animals(kAnimals, r),
        pets(kPetNames, r),
        relatives(kRelatives, r),
        cities(kCities, r),
        foods(kFoodKinds, r),
        dishes(kDishes, r),
        weekdays(kWeekdays, r),
        events(kEvents, r) {}

  std::optional<Fact> make(const std::string& speaker) {
    for (int attempt = 0; attempt < 12; ++attempt) {
      switch (rng.index(6)) {
        case 0:
          if (animals.empty() || pets.empty()) break;
          {
            const auto animal = animals.take();
            const auto name = pets.take();
            return Fact{"I adopted a " + animal + " named " + name + " last week",
                        ContentType::KeyFacts,
                        {"What is the name of the " + animal + " that " + speaker + " adopted?",
                         name, Category::SingleHop, {}}};
          }
        case 1:
          if (relatives.empty() || cities.empty()) break;
          {
            const auto rel = relatives.take();
            const auto city = cities.take();
            return Fact{"My " + rel + " just moved to " + city + " for a new job",
                        ContentType::KeyFacts,
                        {"Which city did " + speaker + "'s " + rel + " move to?", city,
                         Category::SingleHop, {}}};
          }
        case 2:
          if (foods.empty() || dishes.empty()) break;
          {
            const auto food = foods.take();
            const auto dish = dishes.take();
            return Fact{"My favorite " + food + " is the " + dish + " from the corner market",
                        ContentType::Preference,
                        {"What would " + speaker + " order if they wanted their favorite " + food +
                             "?",
                         dish, Category::OpenDomain, {}}};
          }
        case 3:
          if (cities.empty()) break;
          {
            const auto city = cities.take();
            const auto month = pick(rng, kMonths);
            return Fact{"I plan to visit " + city + " in " + month + " with my family",
                        ContentType::Plan,
                        {"When does " + speaker + " plan to visit " + city + "?", month,
                         Category::Temporal, {}}};
          }
        case 4:
          if (weekdays.empty()) break;
          {
            const auto day = weekdays.take();
            const auto act = pick(rng, kActivities);
            return Fact{"Every " + day + " morning I go to " + act + " before work",
                        ContentType::Routine,
                        {"What does " + speaker + " do every " + day + " morning?", act,
                         Category::SingleHop, {}}};
          }
        case 5:
          if (events.empty() || relatives.empty()) break;
          {
            const auto event = events.take();
            const auto rel = relatives.take();
            const auto emo = pick(rng, kEmotions);
            return Fact{"I felt so " + emo + " when my " + rel + " told me about the " + event,
                        ContentType::Emotional,
                        {"How did " + speaker + " feel about the " + event + " news?", emo,
                         Category::SingleHop, {}}};
          }
      }
    }
    return std::nullopt;
  }
};

}  // namespace

SyntheticData planted_fact_corpus(const PlantedOptions& o) {
  SyntheticData data;
  Rng rng(o.seed);
  for (std::size_t c = 0; c < o.conversations; ++c) {
    Conversation conv;
    conv.conversation_id = fmt_id(o.id_prefix + "-", c);
    Rng crng(derive_seed(o.seed, conv.conversation_id));
    const std::size_t a = crng.index(kFirstNames.size());
    std::size_t b = crng.index(kFirstNames.size() - 1);
    if (b >= a) ++b;
    const std::array<std::string, 2> speakers = {std::string(kFirstNames[a]),
                                                 std::string(kFirstNames[b])};
    FactFactory facts(crng);
    const auto times = session_times(crng, o.sessions);
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> adoptions;
    std::size_t index = 0;
    for (std::size_t s = 0; s < o.sessions; ++s) {
      Session session;
      session.session_id = conv.conversation_id + "-s" + std::to_string(s + 1);
      session.datetime = times[s];
      std::size_t session_turns = o.turns_per_session;
      if (o.total_turns) {
        session_turns = *o.total_turns / o.sessions + (s < *o.total_turns % o.sessions ? 1 : 0);
      }
      for (std::size_t t = 0; t < session_turns; ++t) {
        Turn turn;
        turn.turn_id = conv.conversation_id + "-t" + std::to_string(index);
        turn.speaker = speakers[t % 2];
        turn.session_ref = session.session_id;
        turn.turn_index = index++;
        LabelRecord rec{conv.conversation_id, turn.turn_id, Op::Noop, std::nullopt};
        std::optional<Fact> fact;
        if (crng.uniform() < o.fact_rate) fact = facts.make(turn.speaker);
        if (fact) {
          turn.text = fact->text;
          rec.op = Op::Add;
          rec.content_type = fact->type;
          fact->qa.evidence = {turn.turn_id};
          if (fact->type == ContentType::KeyFacts && fact->text.starts_with("I adopted a ")) {
            const auto animal = fact->text.substr(12, fact->text.find(" named ") - 12);
            adoptions[turn.speaker].emplace_back(animal, turn.turn_id);
          }
          conv.qa.push_back(std::move(fact->qa));
        } else {
          turn.text = filler(crng);
        }
        data.labels.insert(std::move(rec));
        session.turns.push_back(std::move(turn));
      }
      conv.sessions.push_back(std::move(session));
    }
    for (const auto& [speaker, list] : adoptions) {
      if (list.size() < 2) continue;
      QAPair qa{"Which animals has " + speaker + " adopted?", "", Category::MultiHop, {}};
      for (const auto& [animal, id] : list) {
        if (!qa.gold_answer.empty()) qa.gold_answer += ", ";
        qa.gold_answer += animal;
        qa.evidence.push_back(id);
      }
      conv.qa.push_back(std::move(qa));
    }
    conv.qa.push_back({"What is the name of " + speakers[0] + "'s pet dragon?", "Not mentioned",
                       Category::Adversarial, {}});
    data.corpus.push_back(std::move(conv));
  }
  return data;
}

SyntheticData keyword_corpus(const KeywordOptions& o) {
  SyntheticData data;
  std::vector<std::string> vocab;
  for (int i = 0; i < 300; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%03d", i);
    vocab.emplace_back(buf);
  }
  for (std::size_t c = 0; c < o.conversations; ++c) {
    Conversation conv;
    conv.conversation_id = fmt_id("kw-", c);
    Rng rng(derive_seed(o.seed, conv.conversation_id));
    Session session;
    session.session_id = conv.conversation_id + "-s1";
    session.datetime = DateTime{2026, 2, 1, 9, 0};
    for (std::size_t t = 0; t < o.turns; ++t) {
      Turn turn;
      turn.turn_id = conv.conversation_id + "-t" + std::to_string(t);
      turn.speaker = t % 2 ? "B" : "A";
      turn.session_ref = session.session_id;
      turn.turn_index = t;
      std::vector<std::string> words;
      const std::size_t n = 6 + rng.index(5);
      for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[rng.index(vocab.size())]);
      const bool add = rng.uniform() < o.add_rate;
      if (add) words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.index(n + 1)), o.keyword);
      std::string text;
      for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
      turn.text = text;
      data.labels.insert({conv.conversation_id, turn.turn_id, add ? Op::Add : Op::Noop,
                          add ? std::optional(ContentType::KeyFacts) : std::nullopt});
      session.turns.push_back(std::move(turn));
    }
    conv.sessions.push_back(std::move(session));
    data.corpus.push_back(std::move(conv));
  }
  return data;
}

SyntheticData benchmark_shaped_corpus(std::size_t conversations, std::size_t sessions,
                                      std::size_t turns, std::uint64_t seed) {
  PlantedOptions o;
  o.conversations = conversations;
  o.sessions = sessions;
  o.total_turns = turns;
  o.seed = seed;
  o.id_prefix = "long";
  return planted_fact_corpus(o);
}

}  // namespace memrouter
