#include "xsem/graph_io.h"

#include <initializer_list>
#include <utility>

#include "json.hpp"
#include "xsem/error.h"

namespace xsem {
namespace {

using nlohmann::json;

void CheckFields(const json& j, std::initializer_list<std::string_view> known,
                 std::string_view what, bool strict) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be an object");
  if (!strict) return;
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || key == k;
    if (!ok) {
      throw InputError("unknown field '" + key + "' in " + std::string(what));
    }
  }
}

const json& Require(const json& j, const char* key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw InputError(std::string(what) + " lacks field '" + key + "'");
  }
  return *it;
}

template <typename T>
T As(const json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string(what) + " has the wrong type");
  }
}

VarKind KindFromJson(const json& j) {
  const auto kind = ParseVarKind(As<std::string>(j, "kind"));
  if (!kind) throw InputError("kind must be \"event\" or \"entity\"");
  return *kind;
}

TokenSpan SpanFromJson(const json& holder) {
  TokenSpan s;
  s.tokens = As<std::vector<std::string>>(Require(holder, "tokens", "span"),
                                          "tokens");
  s.head_index = As<std::size_t>(Require(holder, "head_index", "span"),
                                 "head_index");
  if (auto it = holder.find("origin_positions"); it != holder.end()) {
    s.origin_positions = As<std::vector<std::size_t>>(*it, "origin_positions");
  }
  return s;
}

void SpanToJson(const TokenSpan& s, json& out) {
  out["tokens"] = s.tokens;
  out["head_index"] = s.head_index;
  if (s.origin_positions) out["origin_positions"] = *s.origin_positions;
}

json SkeletonToJson(const Skeleton& sk) {
  json items = json::array();
  for (const SkeletonItem& it : sk.items) {
    items.push_back({{"var", it.var},
                     {"parent", it.parent},
                     {"anchor", it.anchor},
                     {"order", it.order},
                     {"bullet", it.bullet},
                     {"antecedent_word", it.antecedent_word}});
  }
  return items;
}

Skeleton SkeletonFromJson(const json& j, bool strict) {
  if (!j.is_array()) throw InputError("skeleton must be an array");
  Skeleton sk;
  for (const json& e : j) {
    CheckFields(e,
                {"var", "parent", "anchor", "order", "bullet",
                 "antecedent_word"},
                "skeleton item", strict);
    SkeletonItem it;
    it.var = As<std::string>(Require(e, "var", "skeleton item"), "var");
    it.parent = As<std::string>(Require(e, "parent", "skeleton item"),
                                "parent");
    it.anchor = As<std::size_t>(Require(e, "anchor", "skeleton item"),
                                "anchor");
    it.order = As<std::int64_t>(Require(e, "order", "skeleton item"), "order");
    it.bullet = e.contains("bullet") ? As<bool>(e["bullet"], "bullet") : false;
    it.antecedent_word =
        e.contains("antecedent_word")
            ? As<std::size_t>(e["antecedent_word"], "antecedent_word")
            : 0;
    sk.items.push_back(std::move(it));
  }
  return sk;
}

json Parse(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

GraphRecord GraphFromJson(const json& j, bool strict) {
  CheckFields(j, {"id", "vars", "instances", "edges", "skeleton"}, "record",
              strict);
  GraphRecord r;
  if (auto it = j.find("id"); it != j.end()) r.id = As<std::string>(*it, "id");
  const json& vars = Require(j, "vars", "record");
  if (!vars.is_array()) throw InputError("vars must be an array");
  for (const json& v : vars) {
    CheckFields(v, {"id", "kind"}, "variable", strict);
    r.graph.vars.push_back({As<std::string>(Require(v, "id", "variable"), "id"),
                            KindFromJson(Require(v, "kind", "variable"))});
  }
  const json& inst = Require(j, "instances", "record");
  if (!inst.is_object()) throw InputError("instances must be an object");
  for (const auto& [key, value] : inst.items()) {
    CheckFields(value, {"tokens", "head_index", "origin_positions"},
                "instance", strict);
    r.graph.instances[key] = SpanFromJson(value);
  }
  const json& edges = Require(j, "edges", "record");
  if (!edges.is_array()) throw InputError("edges must be an array");
  for (const json& e : edges) {
    if (!e.is_array() || e.size() != 3) {
      throw InputError("an edge must be [governor, label, dependent]");
    }
    r.graph.edges.push_back({As<std::string>(e[0], "edge"),
                             As<std::string>(e[1], "edge"),
                             As<std::string>(e[2], "edge")});
  }
  if (auto it = j.find("skeleton"); it != j.end()) {
    r.skeleton = SkeletonFromJson(*it, strict);
  }
  CheckValid(r.graph);
  return r;
}

FlatRecord FlatFromJson(const json& j, bool strict) {
  CheckFields(j, {"id", "preds", "args"}, "record", strict);
  FlatRecord r;
  if (auto it = j.find("id"); it != j.end()) r.id = As<std::string>(*it, "id");
  const json& preds = Require(j, "preds", "record");
  if (!preds.is_array()) throw InputError("preds must be an array");
  for (const json& p : preds) {
    CheckFields(p, {"var", "kind", "tokens", "head_index", "origin_positions"},
                "predication", strict);
    Predication pred;
    pred.var = {As<std::string>(Require(p, "var", "predication"), "var"),
                KindFromJson(Require(p, "kind", "predication"))};
    pred.span = SpanFromJson(p);
    r.flat.preds.push_back(std::move(pred));
  }
  const json& args = Require(j, "args", "record");
  if (!args.is_array()) throw InputError("args must be an array");
  for (const json& a : args) {
    if (!a.is_array() || a.size() != 2) {
      throw InputError("an argument must be [governor, dependent]");
    }
    r.flat.args.push_back(
        {As<std::string>(a[0], "arg"), As<std::string>(a[1], "arg")});
  }
  CheckValid(r.flat);
  return r;
}

template <typename Record, typename Fn>
std::vector<Record> ReadLines(std::string_view text, Fn&& from_json) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(from_json(Parse(line)));
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + " (record " +
                                std::to_string(out.size() + 1) + "): " + e.what());
    }
  }
  return out;
}

}  // namespace

GraphRecord GraphRecordFromJson(std::string_view line, bool strict) {
  return GraphFromJson(Parse(line), strict);
}

std::string GraphRecordToJson(const GraphRecord& r) {
  json j;
  if (r.id) j["id"] = *r.id;
  j["vars"] = json::array();
  for (const Variable& v : r.graph.vars) {
    j["vars"].push_back({{"id", v.id}, {"kind", std::string(ToString(v.kind))}});
  }
  j["instances"] = json::object();
  for (const auto& [id, span] : r.graph.instances) {
    SpanToJson(span, j["instances"][id]);
  }
  j["edges"] = json::array();
  for (const Edge& e : r.graph.edges) {
    j["edges"].push_back({e.governor, e.label, e.dependent});
  }
  if (r.skeleton) j["skeleton"] = SkeletonToJson(*r.skeleton);
  return j.dump();
}

std::vector<GraphRecord> ReadGraphCorpus(std::string_view text, bool strict) {
  return ReadLines<GraphRecord>(
      text, [strict](const json& j) { return GraphFromJson(j, strict); });
}

std::vector<FlatRecord> ReadFlatCorpus(std::string_view text, bool strict) {
  return ReadLines<FlatRecord>(
      text, [strict](const json& j) { return FlatFromJson(j, strict); });
}

std::string WriteGraphCorpus(std::span<const GraphRecord> corpus) {
  std::string out;
  for (const GraphRecord& r : corpus) out += GraphRecordToJson(r) + "\n";
  return out;
}

std::string WriteFlatCorpus(std::span<const FlatRecord> corpus) {
  std::string out;
  for (const FlatRecord& r : corpus) {
    json j;
    if (r.id) j["id"] = *r.id;
    j["preds"] = json::array();
    for (const Predication& p : r.flat.preds) {
      json pj = {{"var", p.var.id}, {"kind", std::string(ToString(p.var.kind))}};
      SpanToJson(p.span, pj);
      j["preds"].push_back(std::move(pj));
    }
    j["args"] = json::array();
    for (const ArgAssertion& a : r.flat.args) {
      j["args"].push_back({a.governor, a.dependent});
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace xsem
