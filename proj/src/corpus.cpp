#include "memrouter/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "memrouter/error.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kCategoryNames = {
    "single_hop", "multi_hop", "temporal", "open_domain", "adversarial"};
constexpr std::array<std::string_view, 5> kContentTypeNames = {
    "key_facts", "emotional", "preference", "plan", "routine"};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(where + "." + key, "missing or non-string field");
  }
  return it->get_ref<const std::string&>();
}

const json& require_array(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw ParseError(where + "." + key, "missing or non-array field");
  }
  return *it;
}

Conversation conversation_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where, "conversation document must be an object");
  Conversation conv;
  conv.conversation_id = require_string(doc, "conversation_id", where);
  std::size_t index = 0;
  const auto& sessions = require_array(doc, "sessions", where);
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const std::string sw = where + ".sessions[" + std::to_string(s) + "]";
    const json& sj = sessions[s];
    if (!sj.is_object()) throw ParseError(sw, "session must be an object");
    Session session;
    session.session_id = require_string(sj, "session_id", sw);
    const auto& dt = require_string(sj, "datetime", sw);
    auto parsed = DateTime::parse(dt);
    if (!parsed) throw ParseError(sw + ".datetime", "expected YYYY-MM-DD HH:MM, got '" + dt + "'");
    session.datetime = *parsed;
    const auto& turns = require_array(sj, "turns", sw);
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const std::string tw = sw + ".turns[" + std::to_string(t) + "]";
      if (!turns[t].is_object()) throw ParseError(tw, "turn must be an object");
      Turn turn;
      turn.turn_id = require_string(turns[t], "turn_id", tw);
      turn.speaker = require_string(turns[t], "speaker", tw);
      turn.text = require_string(turns[t], "text", tw);
      if (turn.text.empty()) throw ParseError(tw + ".text", "turn text must be non-empty");
      turn.session_ref = session.session_id;
      turn.turn_index = index++;
      session.turns.push_back(std::move(turn));
    }
    conv.sessions.push_back(std::move(session));
  }
  if (auto it = doc.find("qa"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(where + ".qa", "must be an array");
    for (std::size_t q = 0; q < it->size(); ++q) {
      const std::string qw = where + ".qa[" + std::to_string(q) + "]";
      const json& qj = (*it)[q];
      if (!qj.is_object()) throw ParseError(qw, "qa entry must be an object");
      QAPair pair;
      pair.question = require_string(qj, "question", qw);
      pair.gold_answer = require_string(qj, "answer", qw);
      const auto& cat = require_string(qj, "category", qw);
      auto c = parse_category(cat);
      if (!c) throw ParseError(qw + ".category", "unknown category '" + cat + "'");
      pair.category = *c;
      if (auto ev = qj.find("evidence"); ev != qj.end()) {
        if (!ev->is_array()) throw ParseError(qw + ".evidence", "must be an array of turn ids");
        for (const auto& e : *ev) {
          if (!e.is_string()) throw ParseError(qw + ".evidence", "must be an array of turn ids");
          pair.evidence.push_back(e.get<std::string>());
        }
      }
      conv.qa.push_back(std::move(pair));
    }
  }
  return conv;
}

json conversation_to_json(const Conversation& conv) {
  json doc;
  doc["conversation_id"] = conv.conversation_id;
  doc["sessions"] = json::array();
  for (const auto& s : conv.sessions) {
    json sj;
    sj["session_id"] = s.session_id;
    sj["datetime"] = s.datetime.str();
    sj["turns"] = json::array();
    for (const auto& t : s.turns) {
      sj["turns"].push_back({{"turn_id", t.turn_id}, {"speaker", t.speaker}, {"text", t.text}});
    }
    doc["sessions"].push_back(std::move(sj));
  }
  doc["qa"] = json::array();
  for (const auto& q : conv.qa) {
    json qj{{"question", q.question},
            {"answer", q.gold_answer},
            {"category", std::string(to_string(q.category))}};
    if (!q.evidence.empty()) qj["evidence"] = q.evidence;
    doc["qa"].push_back(std::move(qj));
  }
  return doc;
}

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<int>(c)]; }
std::string_view to_string(Op op) { return op == Op::Add ? "ADD" : "NOOP"; }
std::string_view to_string(ContentType t) { return kContentTypeNames[static_cast<int>(t)]; }

std::optional<Category> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::optional<Op> parse_op(std::string_view s) {
  if (s == "ADD") return Op::Add;
  if (s == "NOOP") return Op::Noop;
  return std::nullopt;
}

std::optional<ContentType> parse_content_type(std::string_view s) {
  for (std::size_t i = 0; i < kContentTypeNames.size(); ++i) {
    if (kContentTypeNames[i] == s) return static_cast<ContentType>(i);
  }
  return std::nullopt;
}

std::optional<DateTime> DateTime::parse(std::string_view s) {
  // YYYY-MM-DD HH:MM
  if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':') {
    return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) -> int {
    auto part = s.substr(pos, len);
    if (!is_all_digits(part)) return -1;
    return std::stoi(std::string(part));
  };
  DateTime d{num(0, 4), num(5, 2), num(8, 2), num(11, 2), num(14, 2)};
  if (d.year < 0 || d.month < 1 || d.month > 12 || d.day < 1 || d.hour < 0 || d.hour > 23 ||
      d.minute < 0 || d.minute > 59) {
    return std::nullopt;
  }
  if (d.day > days_in_month(d.year, d.month)) return std::nullopt;
  return d;
}

std::string DateTime::str() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d", year, month, day, hour, minute);
  return buf;
}

std::vector<TurnView> Conversation::turns() const {
  std::vector<TurnView> out;
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) out.push_back({&t, &s});
  }
  return out;
}

std::size_t Conversation::turn_count() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.turns.size();
  return n;
}

std::vector<std::string> Conversation::speakers() const {
  std::vector<std::string> out;
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) {
      if (std::find(out.begin(), out.end(), t.speaker) == out.end()) out.push_back(t.speaker);
    }
  }
  return out;
}

const Turn* Conversation::find_turn(std::string_view turn_id) const {
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) {
      if (t.turn_id == turn_id) return &t;
    }
  }
  return nullptr;
}

void validate(const Corpus& corpus) {
  std::unordered_set<std::string> conv_ids;
  for (const auto& conv : corpus) {
    if (!conv_ids.insert(conv.conversation_id).second) {
      throw InvariantError("duplicate conversation_id '" + conv.conversation_id + "'");
    }
    std::unordered_set<std::string> turn_ids;
    std::optional<DateTime> prev;
    std::size_t expect_index = 0;
    for (const auto& s : conv.sessions) {
      if (prev && s.datetime < *prev) {
        throw InvariantError("conversation '" + conv.conversation_id + "': session '" +
                             s.session_id + "' datetime " + s.datetime.str() +
                             " precedes the previous session");
      }
      prev = s.datetime;
      for (const auto& t : s.turns) {
        if (!turn_ids.insert(t.turn_id).second) {
          throw InvariantError("conversation '" + conv.conversation_id +
                               "': duplicate turn_id '" + t.turn_id + "'");
        }
        if (t.text.empty()) {
          throw InvariantError("turn '" + t.turn_id + "' has empty text");
        }
        if (t.turn_index != expect_index++) {
          throw InvariantError("turn '" + t.turn_id + "' has non-contiguous turn_index");
        }
      }
    }
  }
}

Corpus parse_corpus(std::string_view text, std::string_view source) {
  Corpus corpus;
  const std::string src(source);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(src + ":byte " + std::to_string(e.byte), e.what());
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      corpus.push_back(conversation_from_json(arr[i], src + ":document " + std::to_string(i + 1)));
    }
  } else {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      ++line_no;
      auto line = trim(text.substr(pos, nl - pos));
      pos = nl + 1;
      if (line.empty()) continue;
      const std::string where = src + ":line " + std::to_string(line_no);
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(where, e.what());
      }
      corpus.push_back(conversation_from_json(doc, where));
    }
  }
  validate(corpus);
  return corpus;
}

Corpus load_corpus(const std::string& path) { return parse_corpus(read_text(path), path); }

std::string serialize_conversation(const Conversation& conv) {
  return conversation_to_json(conv).dump();
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& c : corpus) {
    out += serialize_conversation(c);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << serialize_corpus(corpus);
}

void LabelSet::insert(LabelRecord rec) {
  auto key = std::make_pair(rec.conversation_id, rec.turn_id);
  records_.insert_or_assign(std::move(key), std::move(rec));
}

const LabelRecord* LabelSet::find(std::string_view conversation_id,
                                  std::string_view turn_id) const {
  auto it = records_.find(std::make_pair(std::string(conversation_id), std::string(turn_id)));
  return it == records_.end() ? nullptr : &it->second;
}

LabelSet parse_labels(std::string_view text, const Corpus& corpus, std::string_view source) {
  std::map<std::string, std::vector<std::string>, std::less<>> owners;
  for (const auto& conv : corpus) {
    for (const auto& tv : conv.turns()) owners[tv.turn->turn_id].push_back(conv.conversation_id);
  }
  LabelSet labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":line " + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where, e.what());
    }
    if (!rec.is_object()) throw ParseError(where, "label record must be an object");
    LabelRecord out;
    out.turn_id = require_string(rec, "turn_id", where);
    const auto& op = require_string(rec, "op", where);
    auto parsed_op = parse_op(op);
    if (!parsed_op) throw ParseError(where + ".op", "expected ADD or NOOP, got '" + op + "'");
    out.op = *parsed_op;
    if (auto ct = rec.find("content_type"); ct != rec.end() && !ct->is_null()) {
      if (!ct->is_string()) throw ParseError(where + ".content_type", "must be a string");
      auto t = parse_content_type(ct->get<std::string>());
      if (!t) {
        throw ParseError(where + ".content_type",
                         "unknown content type '" + ct->get<std::string>() + "'");
      }
      out.content_type = *t;
    }
    if (out.op == Op::Add && !out.content_type) {
      throw InvariantError(where + ": turn '" + out.turn_id + "' is ADD without content_type");
    }
    if (out.op == Op::Noop && out.content_type) {
      throw InvariantError(where + ": turn '" + out.turn_id + "' is NOOP but has content_type");
    }
    auto it = owners.find(out.turn_id);
    if (it == owners.end()) {
      throw InvariantError(where + ": unknown turn_id '" + out.turn_id + "'");
    }
    if (auto cid = rec.find("conversation_id"); cid != rec.end()) {
      if (!cid->is_string()) throw ParseError(where + ".conversation_id", "must be a string");
      out.conversation_id = cid->get<std::string>();
      if (std::find(it->second.begin(), it->second.end(), out.conversation_id) ==
          it->second.end()) {
        throw InvariantError(where + ": unknown turn_id '" + out.turn_id +
                             "' in conversation '" + out.conversation_id + "'");
      }
    } else {
      if (it->second.size() != 1) {
        throw InvariantError(where + ": turn_id '" + out.turn_id +
                             "' is ambiguous across conversations; add conversation_id");
      }
      out.conversation_id = it->second.front();
    }
    labels.insert(std::move(out));
  }
  return labels;
}

LabelSet load_labels(const std::string& path, const Corpus& corpus) {
  return parse_labels(read_text(path), corpus, path);
}

std::string serialize_labels(const LabelSet& labels) {
  std::string out;
  for (const auto& [key, rec] : labels) {
    json j{{"conversation_id", rec.conversation_id},
           {"turn_id", rec.turn_id},
           {"op", std::string(to_string(rec.op))}};
    if (rec.content_type) j["content_type"] = std::string(to_string(*rec.content_type));
    out += j.dump();
    out += '\n';
  }
  return out;
}

SplitSpec SplitSpec::by_ratio(const Corpus& corpus, int train, int validation, int test) {
  const double total = train + validation + test;
  const auto n = corpus.size();
  auto count = [&](int part) {
    auto c = static_cast<std::size_t>(std::lround(n * part / total));
    return part > 0 && n > 0 ? std::max<std::size_t>(c, 1) : c;
  };
  std::size_t n_train = std::min(count(train), n);
  std::size_t n_val = std::min(count(validation), n - n_train);
  SplitSpec spec;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = corpus[i].conversation_id;
    if (i < n_train) {
      spec.train.push_back(id);
    } else if (i < n_train + n_val) {
      spec.validation.push_back(id);
    } else {
      spec.test.push_back(id);
    }
  }
  return spec;
}

bool Split::is_test(std::string_view conversation_id) const {
  for (const auto* c : test) {
    if (c->conversation_id == conversation_id) return true;
  }
  return false;
}

Split apply_split(const Corpus& corpus, const SplitSpec& spec) {
  std::map<std::string, const Conversation*, std::less<>> by_id;
  for (const auto& c : corpus) by_id[c.conversation_id] = &c;
  std::map<std::string, std::string, std::less<>> assigned;
  Split split;
  auto take = [&](const std::vector<std::string>& ids, const char* name,
                  std::vector<const Conversation*>& out) {
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw InvariantError(std::string("split '") + name + "' names unknown conversation '" +
                             id + "'");
      }
      auto [pos, fresh] = assigned.emplace(id, name);
      if (!fresh) {
        throw InvariantError("conversation '" + id + "' appears in both '" + pos->second +
                             "' and '" + name + "' splits");
      }
      out.push_back(it->second);
    }
  };
  take(spec.train, "train", split.train);
  take(spec.validation, "validation", split.validation);
  take(spec.test, "test", split.test);
  for (const auto& c : corpus) {
    if (!assigned.contains(c.conversation_id)) {
      throw InvariantError("conversation '" + c.conversation_id + "' is not assigned to a split");
    }
  }
  if (split.test.empty()) split.warnings.emplace_back("test split is empty");
  return split;
}

}  // namespace memrouter
