#pragma once

// JSON Lines corpora: one record per line, one line per sentence.
//
// Graph record:
//   {"id": "s1",                                      (optional)
//    "vars": [{"id": "e1", "kind": "event"}, ...],
//    "instances": {"e1": {"tokens": ["sleeps"], "head_index": 0,
//                         "origin_positions": [3]}, ...},  (positions optional)
//    "edges": [["e1", "ARG", "x1"], ...],
//    "skeleton": [{"var": "x1", "parent": "e1", "anchor": 1, "order": 0,
//                  "bullet": false, "antecedent_word": 0}, ...]}  (optional)
//
// Flat record:
//   {"id": "s1",                                      (optional)
//    "preds": [{"var": "e1", "kind": "event", "tokens": ["sleeps"],
//               "head_index": 0, "origin_positions": [3]}, ...],
//    "args": [["e1", "x1"], ...]}
//
// In strict mode unknown fields are rejected. Blank lines are skipped.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xsem/linearize.h"
#include "xsem/repr.h"

namespace xsem {

struct GraphRecord {
  std::optional<std::string> id;
  GraphRepr graph;
  std::optional<Skeleton> skeleton;
};

struct FlatRecord {
  std::optional<std::string> id;
  FlatRepr flat;
};

// Parse errors name the 1-based line. Records are validated.
std::vector<GraphRecord> ReadGraphCorpus(std::string_view text,
                                         bool strict = true);
std::vector<FlatRecord> ReadFlatCorpus(std::string_view text,
                                       bool strict = true);

std::string WriteGraphCorpus(std::span<const GraphRecord> corpus);
std::string WriteFlatCorpus(std::span<const FlatRecord> corpus);

std::string GraphRecordToJson(const GraphRecord& record);
GraphRecord GraphRecordFromJson(std::string_view line, bool strict = true);

}  // namespace xsem
