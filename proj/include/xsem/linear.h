#pragma once

// Linearized representation: a bracketed token sequence plus one coreference
// assignment per token.
//
// Text form of one block:
//
//   [ were reported_h ( 30 people_h ) ] ( @b )
//   #coref 7 5
//
// Line 1 holds the space-separated tokens. `[` `]` delimit a predicate span,
// `(` `)` an argument span, `@b` (or the UTF-8 bullet) is the bullet token,
// and a trailing `_h` marks the head word of a span. A backslash escapes a
// reserved spelling inside a word: `\[`, `\(`, `\@b`, `\\`, a final `\_h`,
// and a leading `\#`. Each following `#coref <bullet> <antecedent>` line
// links a bullet position to an earlier word position (0-based over line 1).
//
// A corpus file is a sequence of blocks separated by one blank line. An empty
// representation occupies a block consisting of the single line `#empty`.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xsem/repr.h"

namespace xsem {

enum class LinTokenKind {
  kOpenPred,
  kClosePred,
  kOpenArg,
  kCloseArg,
  kBullet,
  kWord,
};

struct LinToken {
  LinTokenKind kind = LinTokenKind::kWord;
  std::string surface;  // words only
  bool is_head = false;  // words only

  static LinToken OpenPred() { return {LinTokenKind::kOpenPred, {}, false}; }
  static LinToken ClosePred() { return {LinTokenKind::kClosePred, {}, false}; }
  static LinToken OpenArg() { return {LinTokenKind::kOpenArg, {}, false}; }
  static LinToken CloseArg() { return {LinTokenKind::kCloseArg, {}, false}; }
  static LinToken Bullet() { return {LinTokenKind::kBullet, {}, false}; }
  static LinToken Word(std::string surface, bool is_head = false) {
    return {LinTokenKind::kWord, std::move(surface), is_head};
  }

  bool IsWord() const { return kind == LinTokenKind::kWord; }
  bool IsBullet() const { return kind == LinTokenKind::kBullet; }
  bool IsHeadWord() const { return IsWord() && is_head; }

  bool operator==(const LinToken&) const = default;
};

// Coreference assignment of one token: an antecedent position, or nullopt
// for the dummy antecedent (epsilon).
using Assignment = std::optional<std::size_t>;

struct LinearizedRepr {
  std::vector<LinToken> tokens;
  std::vector<Assignment> assignments;  // parallel to tokens

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  bool operator==(const LinearizedRepr&) const = default;
};

struct TextOptions {
  bool utf8_bullet = false;  // write "•" instead of "@b"
  // Accept bullets without an antecedent, as produced by resolvers that fall
  // back to epsilon. Such representations are not well formed otherwise.
  bool allow_unlinked_bullets = false;
};

inline constexpr std::string_view kBulletAscii = "@b";
inline constexpr std::string_view kBulletUtf8 = "\xE2\x80\xA2";

std::string EncodeToken(const LinToken& token, const TextOptions& options = {});
LinToken DecodeToken(std::string_view text);  // throws xsem::Error (input)

// Empty iff all invariants hold: balanced nesting, bullet assignments point to
// earlier words, every other token has epsilon, and each span has exactly one
// head (a head word or a bullet) at its top level.
std::vector<Violation> Validate(const LinearizedRepr& l,
                                const TextOptions& options = {});
void CheckValid(const LinearizedRepr& l, const TextOptions& options = {});

LinearizedRepr ParseText(std::string_view block,
                         const TextOptions& options = {});
std::string SerializeText(const LinearizedRepr& l,
                          const TextOptions& options = {});

std::vector<LinearizedRepr> ReadLinearCorpus(std::string_view text,
                                             const TextOptions& options = {});
std::string WriteLinearCorpus(std::span<const LinearizedRepr> corpus,
                              const TextOptions& options = {});

// Span structure of a well-nested token sequence.
struct SpanInfo {
  bool is_pred = false;
  std::size_t open = 0;   // position of the opening bracket
  std::size_t close = 0;  // position of the closing bracket
  int parent = -1;        // enclosing span index, -1 at the root
  std::vector<std::size_t> words;    // top-level word positions
  std::vector<std::size_t> bullets;  // top-level bullet positions
  std::vector<int> children;         // nested spans, in order
  std::vector<std::size_t> heads;    // top-level head words and bullets
};

struct SpanTree {
  std::vector<SpanInfo> spans;  // in opening order
  std::vector<int> root_children;
  std::vector<std::size_t> root_words;
  std::vector<std::size_t> root_bullets;
  std::vector<int> innermost;  // innermost span per token position, -1 if none

  // True when span `s` holds exactly one bullet and nothing else.
  bool IsLoneBullet(int s) const;
};

// Throws xsem::Error (input) on unbalanced or crossing brackets.
SpanTree BuildSpanTree(std::span<const LinToken> tokens);

}  // namespace xsem
