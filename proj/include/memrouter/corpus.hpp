#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memrouter {

enum class Category { SingleHop, MultiHop, Temporal, OpenDomain, Adversarial };
enum class Op { Add = 0, Noop = 1 };
enum class ContentType { KeyFacts = 0, Emotional, Preference, Plan, Routine };

inline constexpr std::size_t kNumContentTypes = 5;
inline constexpr std::array<Category, 4> kScoredCategories = {
    Category::SingleHop, Category::MultiHop, Category::Temporal, Category::OpenDomain};

std::string_view to_string(Category c);
std::string_view to_string(Op op);
std::string_view to_string(ContentType t);
std::optional<Category> parse_category(std::string_view s);
std::optional<Op> parse_op(std::string_view s);
std::optional<ContentType> parse_content_type(std::string_view s);

/// Calendar timestamp with minute precision, rendered as `YYYY-MM-DD HH:MM`.
struct DateTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;

  static std::optional<DateTime> parse(std::string_view s);
  std::string str() const;
  auto operator<=>(const DateTime&) const = default;
};

struct Turn {
  std::string turn_id;
  std::string speaker;
  std::string text;
  std::string session_ref;
  std::size_t turn_index = 0;  // 0-based, global within the conversation
};

struct Session {
  std::string session_id;
  DateTime datetime;
  std::vector<Turn> turns;
};

struct QAPair {
  std::string question;
  std::string gold_answer;
  Category category = Category::SingleHop;
  /// Optional supporting turn ids. Only used for retrieval hit-rate diagnostics.
  std::vector<std::string> evidence;

  bool scorable() const noexcept { return category != Category::Adversarial; }
};

/// A turn together with the session that owns it.
struct TurnView {
  const Turn* turn;
  const Session* session;
};

struct Conversation {
  std::string conversation_id;
  std::vector<Session> sessions;
  std::vector<QAPair> qa;

  /// Turns in document order; pointers stay valid while the conversation lives.
  std::vector<TurnView> turns() const;
  std::size_t turn_count() const;
  /// Speakers ordered by first appearance.
  std::vector<std::string> speakers() const;
  const Turn* find_turn(std::string_view turn_id) const;
};

using Corpus = std::vector<Conversation>;

/// Loads a conversation file: JSON Lines (one document per line) or a JSON
/// array of documents. Throws ParseError / InvariantError.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus(std::string_view text, std::string_view source = "<memory>");
/// Checks every corpus invariant; throws InvariantError naming the offender.
void validate(const Corpus& corpus);

std::string serialize_conversation(const Conversation& conv);
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const std::string& path, const Corpus& corpus);

struct LabelRecord {
  std::string conversation_id;
  std::string turn_id;
  Op op = Op::Noop;
  std::optional<ContentType> content_type;
};

/// Turn-level supervision keyed by (conversation_id, turn_id).
class LabelSet {
 public:
  void insert(LabelRecord rec);
  const LabelRecord* find(std::string_view conversation_id, std::string_view turn_id) const;
  std::size_t size() const noexcept { return records_.size(); }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

 private:
  std::map<std::pair<std::string, std::string>, LabelRecord, std::less<>> records_;
};

/// One JSON record per line: {"turn_id", "op", "content_type"?, "conversation_id"?}.
/// A record without conversation_id must name a turn id that is unique across
/// the corpus.
LabelSet load_labels(const std::string& path, const Corpus& corpus);
LabelSet parse_labels(std::string_view text, const Corpus& corpus,
                      std::string_view source = "<memory>");
std::string serialize_labels(const LabelSet& labels);

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  /// Conversation-level split in corpus order, e.g. 1:1:8.
  static SplitSpec by_ratio(const Corpus& corpus, int train, int validation, int test);
};

struct Split {
  std::vector<const Conversation*> train;
  std::vector<const Conversation*> validation;
  std::vector<const Conversation*> test;
  std::vector<std::string> warnings;

  bool is_test(std::string_view conversation_id) const;
};

/// Throws InvariantError on overlap, unknown ids or uncovered conversations.
Split apply_split(const Corpus& corpus, const SplitSpec& spec);

}  // namespace memrouter
