#include "xsem/linear.h"

#include <algorithm>
#include <charconv>
#include <utility>

#include "xsem/error.h"

namespace xsem {
namespace {

bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool IsReservedSpelling(std::string_view s) {
  return s == "[" || s == "]" || s == "(" || s == ")" || s == kBulletAscii ||
         s == kBulletUtf8;
}

std::string_view KindName(LinTokenKind kind) {
  switch (kind) {
    case LinTokenKind::kOpenPred: return "[";
    case LinTokenKind::kClosePred: return "]";
    case LinTokenKind::kOpenArg: return "(";
    case LinTokenKind::kCloseArg: return ")";
    case LinTokenKind::kBullet: return "bullet";
    case LinTokenKind::kWord: return "word";
  }
  return "?";
}

struct TreeResult {
  SpanTree tree;
  std::string error;
  std::size_t error_pos = 0;
};

TreeResult TryBuildSpanTree(std::span<const LinToken> tokens) {
  TreeResult r;
  SpanTree& t = r.tree;
  t.innermost.assign(tokens.size(), -1);
  std::vector<int> stack;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const LinToken& tok = tokens[pos];
    const int top = stack.empty() ? -1 : stack.back();
    switch (tok.kind) {
      case LinTokenKind::kOpenPred:
      case LinTokenKind::kOpenArg: {
        SpanInfo info;
        info.is_pred = tok.kind == LinTokenKind::kOpenPred;
        info.open = pos;
        info.parent = top;
        const int id = static_cast<int>(t.spans.size());
        t.spans.push_back(std::move(info));
        if (top < 0) {
          t.root_children.push_back(id);
        } else {
          t.spans[top].children.push_back(id);
        }
        stack.push_back(id);
        t.innermost[pos] = id;
        break;
      }
      case LinTokenKind::kClosePred:
      case LinTokenKind::kCloseArg: {
        const bool pred = tok.kind == LinTokenKind::kClosePred;
        if (top < 0) {
          r.error = std::string("unbalanced span: '") +
                    std::string(KindName(tok.kind)) + "' closes nothing";
          r.error_pos = pos;
          return r;
        }
        if (t.spans[top].is_pred != pred) {
          r.error = std::string("crossing spans: '") +
                    std::string(KindName(tok.kind)) + "' closes a span opened by '" +
                    (t.spans[top].is_pred ? "[" : "(") + "' at position " +
                    std::to_string(t.spans[top].open);
          r.error_pos = pos;
          return r;
        }
        t.spans[top].close = pos;
        t.innermost[pos] = top;
        stack.pop_back();
        break;
      }
      case LinTokenKind::kBullet:
      case LinTokenKind::kWord: {
        t.innermost[pos] = top;
        const bool bullet = tok.kind == LinTokenKind::kBullet;
        if (top < 0) {
          (bullet ? t.root_bullets : t.root_words).push_back(pos);
        } else {
          SpanInfo& s = t.spans[top];
          (bullet ? s.bullets : s.words).push_back(pos);
          if (bullet || tok.is_head) s.heads.push_back(pos);
        }
        break;
      }
    }
  }
  if (!stack.empty()) {
    const SpanInfo& s = t.spans[stack.back()];
    r.error = std::string("unbalanced span: '") + (s.is_pred ? "[" : "(") +
              "' at position " + std::to_string(s.open) + " is never closed";
    r.error_pos = s.open;
  }
  return r;
}

}  // namespace

bool SpanTree::IsLoneBullet(int s) const {
  const SpanInfo& info = spans[s];
  return info.bullets.size() == 1 && info.words.empty() &&
         info.children.empty();
}

SpanTree BuildSpanTree(std::span<const LinToken> tokens) {
  TreeResult r = TryBuildSpanTree(tokens);
  if (!r.error.empty()) {
    throw InputError("position " + std::to_string(r.error_pos) + ": " +
                     r.error);
  }
  return std::move(r.tree);
}

std::string EncodeToken(const LinToken& token, const TextOptions& options) {
  switch (token.kind) {
    case LinTokenKind::kOpenPred: return "[";
    case LinTokenKind::kClosePred: return "]";
    case LinTokenKind::kOpenArg: return "(";
    case LinTokenKind::kCloseArg: return ")";
    case LinTokenKind::kBullet:
      return std::string(options.utf8_bullet ? kBulletUtf8 : kBulletAscii);
    case LinTokenKind::kWord: break;
  }
  const std::string& s = token.surface;
  if (s.empty()) throw InputError("cannot encode an empty word");
  if (std::any_of(s.begin(), s.end(), IsSpace)) {
    throw InputError("word '" + s + "' contains whitespace");
  }
  std::string out;
  out.reserve(s.size() + 4);
  if (IsReservedSpelling(s) || s.front() == '#') out += '\\';
  for (char c : s) {
    if (c == '\\') out += '\\';
    out += c;
  }
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "_h") == 0) {
    out.insert(out.size() - 2, 1, '\\');
  }
  if (token.is_head) out += "_h";
  return out;
}

LinToken DecodeToken(std::string_view text) {
  if (text == "[") return LinToken::OpenPred();
  if (text == "]") return LinToken::ClosePred();
  if (text == "(") return LinToken::OpenArg();
  if (text == ")") return LinToken::CloseArg();
  if (text == kBulletAscii || text == kBulletUtf8) return LinToken::Bullet();

  std::string chars;
  std::vector<bool> escaped;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\') {
      if (i + 1 == text.size()) {
        throw InputError("token '" + std::string(text) +
                         "' ends with a bare backslash");
      }
      chars += text[++i];
      escaped.push_back(true);
    } else {
      chars += text[i];
      escaped.push_back(false);
    }
  }
  bool head = false;
  const std::size_t n = chars.size();
  if (n >= 2 && chars[n - 2] == '_' && chars[n - 1] == 'h' &&
      !escaped[n - 2] && !escaped[n - 1]) {
    head = true;
    chars.resize(n - 2);
  }
  if (chars.empty()) {
    throw InputError("token '" + std::string(text) + "' has an empty word");
  }
  return LinToken::Word(std::move(chars), head);
}

std::vector<Violation> Validate(const LinearizedRepr& l,
                                const TextOptions& options) {
  std::vector<Violation> out;
  if (l.assignments.size() != l.tokens.size()) {
    out.push_back({"assignment-length", "",
                   "assignments and tokens differ in length"});
    return out;
  }
  for (std::size_t pos = 0; pos < l.tokens.size(); ++pos) {
    const LinToken& tok = l.tokens[pos];
    const std::string where = "position " + std::to_string(pos);
    if (tok.IsWord()) {
      if (tok.surface.empty()) {
        out.push_back({"word-surface", where, "empty word"});
      } else if (std::any_of(tok.surface.begin(), tok.surface.end(), IsSpace)) {
        out.push_back({"word-surface", where, "word contains whitespace"});
      }
    }
    const Assignment& a = l.assignments[pos];
    if (tok.IsBullet()) {
      if (!a) {
        if (!options.allow_unlinked_bullets) {
          out.push_back(
              {"bullet-assignment", where, "bullet has no antecedent"});
        }
      } else if (*a >= pos) {
        out.push_back({"bullet-assignment", where,
                       "antecedent " + std::to_string(*a) +
                           " does not precede the bullet"});
      } else if (!l.tokens[*a].IsWord()) {
        out.push_back({"bullet-assignment", where,
                       "antecedent " + std::to_string(*a) + " is not a word"});
      }
    } else if (a) {
      out.push_back({"epsilon-assignment", where,
                     "only bullets may carry an antecedent"});
    }
  }
  TreeResult r = TryBuildSpanTree(l.tokens);
  if (!r.error.empty()) {
    out.push_back(
        {"nesting", "position " + std::to_string(r.error_pos), r.error});
    return out;
  }
  for (const SpanInfo& s : r.tree.spans) {
    if (s.heads.size() != 1) {
      out.push_back({"span-head", "position " + std::to_string(s.open),
                     std::string(s.is_pred ? "predicate" : "argument") +
                         " span has " + std::to_string(s.heads.size()) +
                         " heads at its top level"});
    }
  }
  return out;
}

void CheckValid(const LinearizedRepr& l, const TextOptions& options) {
  auto vs = Validate(l, options);
  if (vs.empty()) return;
  std::string msg;
  for (const Violation& v : vs) {
    if (!msg.empty()) msg += "; ";
    msg += Describe(v);
  }
  throw InputError("invalid linearized representation: " + msg);
}

namespace {

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), IsSpace);
}

struct Field {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Field> SplitFields(std::string_view line) {
  std::vector<Field> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && IsSpace(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !IsSpace(line[j])) ++j;
    out.push_back({line.substr(i, j - i), i + 1});
    i = j;
  }
  return out;
}

[[noreturn]] void FailAt(std::size_t line, std::size_t column,
                         const std::string& what) {
  throw InputError("line " + std::to_string(line) + ", column " +
                   std::to_string(column) + ": " + what);
}

std::size_t ParsePosition(const Field& f, std::size_t line) {
  std::size_t value = 0;
  const char* begin = f.text.data();
  const char* end = begin + f.text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    FailAt(line, f.column,
           "expected a position, got '" + std::string(f.text) + "'");
  }
  return value;
}

// Parses lines [first, last) of a block; `line_offset` is the 1-based number
// of the first line, for diagnostics.
LinearizedRepr ParseLines(std::span<const std::string_view> lines,
                          std::size_t line_offset,
                          const TextOptions& options) {
  LinearizedRepr l;
  if (lines.empty()) return l;
  if (lines.front() == "#empty") {
    if (lines.size() > 1) {
      FailAt(line_offset + 1, 1, "an empty block carries no coref lines");
    }
    return l;
  }
  if (lines.front().starts_with("#coref")) {
    FailAt(line_offset, 1, "block has no token line");
  }
  const auto fields = SplitFields(lines.front());
  l.tokens.reserve(fields.size());
  for (const Field& f : fields) {
    try {
      l.tokens.push_back(DecodeToken(f.text));
    } catch (const Error& e) {
      FailAt(line_offset, f.column, e.what());
    }
  }
  l.assignments.assign(l.tokens.size(), std::nullopt);

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = line_offset + i;
    const auto parts = SplitFields(lines[i]);
    if (parts.empty()) continue;
    if (parts.size() != 3 || parts[0].text != "#coref") {
      FailAt(line_no, 1, "expected '#coref <bullet> <antecedent>'");
    }
    const std::size_t bullet = ParsePosition(parts[1], line_no);
    const std::size_t antecedent = ParsePosition(parts[2], line_no);
    if (bullet >= l.tokens.size()) {
      FailAt(line_no, parts[1].column,
             "bullet position " + std::to_string(bullet) + " out of range");
    }
    if (!l.tokens[bullet].IsBullet()) {
      FailAt(line_no, parts[1].column,
             "position " + std::to_string(bullet) + " is not a bullet");
    }
    if (antecedent >= l.tokens.size()) {
      FailAt(line_no, parts[2].column,
             "antecedent position " + std::to_string(antecedent) +
                 " out of range");
    }
    if (l.assignments[bullet]) {
      FailAt(line_no, 1,
             "bullet " + std::to_string(bullet) + " linked more than once");
    }
    l.assignments[bullet] = antecedent;
  }

  const auto violations = Validate(l, options);
  if (!violations.empty()) {
    // Report the first problem at the column of the offending token if known.
    const Violation& v = violations.front();
    std::size_t column = 1;
    if (v.element.starts_with("position ")) {
      const std::size_t pos = std::stoul(v.element.substr(9));
      if (pos < fields.size()) column = fields[pos].column;
    }
    FailAt(line_offset, column, Describe(v));
  }
  return l;
}

}  // namespace

LinearizedRepr ParseText(std::string_view block, const TextOptions& options) {
  auto lines = SplitLines(block);
  while (!lines.empty() && IsBlank(lines.back())) lines.pop_back();
  if (!lines.empty() && IsBlank(lines.front())) {
    throw InputError("line 1: block starts with a blank line");
  }
  return ParseLines(lines, 1, options);
}

std::string SerializeText(const LinearizedRepr& l, const TextOptions& options) {
  CheckValid(l, options);
  if (l.empty()) return {};
  std::string out;
  for (std::size_t i = 0; i < l.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += EncodeToken(l.tokens[i], options);
  }
  out += '\n';
  for (std::size_t i = 0; i < l.tokens.size(); ++i) {
    if (l.assignments[i]) {
      out += "#coref " + std::to_string(i) + " " +
             std::to_string(*l.assignments[i]) + "\n";
    }
  }
  return out;
}

std::vector<LinearizedRepr> ReadLinearCorpus(std::string_view text,
                                             const TextOptions& options) {
  const auto lines = SplitLines(text);
  std::vector<LinearizedRepr> corpus;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (IsBlank(lines[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lines.size() && !IsBlank(lines[j])) ++j;
    try {
      corpus.push_back(ParseLines(
          std::span<const std::string_view>(lines).subspan(i, j - i), i + 1,
          options));
    } catch (const Error& e) {
      throw Error(e.kind(),
                  "block " + std::to_string(corpus.size() + 1) + ": " + e.what());
    }
    i = j;
  }
  return corpus;
}

std::string WriteLinearCorpus(std::span<const LinearizedRepr> corpus,
                              const TextOptions& options) {
  std::string out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i > 0) out += '\n';
    out += corpus[i].empty() ? std::string("#empty\n")
                             : SerializeText(corpus[i], options);
  }
  return out;
}

}  // namespace xsem
