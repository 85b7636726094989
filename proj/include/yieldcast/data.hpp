#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"

// HTE dataset ingestion and split construction. Records keep their CSV row
// order; every split is a pure function of its inputs and seed.

namespace yieldcast::data {

// Stand-in SMILES for an intentionally absent condition component (for
// example a control run without an additive). Tokenizes to one opaque
// bracket token, so it gets its own vocabulary entry.
inline const std::string kNoneComponent = "[None]";

struct Component {
  std::string role;
  std::string smiles;
  std::string name;  // optional display name, may be empty
};

struct ReactionRecord {
  std::vector<Component> components;  // schema role order
  double yield_fraction = 0.0;        // clamped to [0,1]
  double raw_yield = 0.0;             // as read, 0-100 scale
};

struct DatasetSchema {
  std::string name;
  std::vector<std::string> roles;            // column order
  std::vector<std::string> condition_roles;  // subset of roles
  std::vector<std::string> reactant_roles;   // roles minus condition roles

  int role_index(const std::string& role) const;
};

const DatasetSchema& buchwald_hartwig_schema();
const DatasetSchema& suzuki_miyaura_schema();
// Errors with InvalidConfig for anything else.
const DatasetSchema& schema_by_name(const std::string& name);

struct Dataset {
  DatasetSchema schema;
  std::vector<ReactionRecord> records;
  std::size_t clamped_rows = 0;  // yields outside [0,100] clipped at load
};

// CSV per the schema: `<role>_smiles` columns in order, optional
// `<role>_name` columns, and a `yield` column on the 0-100 scale. Empty
// SMILES cells are allowed for condition roles and become kNoneComponent.
Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// n independent seeded shuffles; the first floor(ratio*size) indices train,
// the rest test. Per-fold seeds derive from (seed, fold).
std::vector<Split> random_folds(int n, double ratio, std::uint64_t seed,
                                std::size_t size);

// Seeded selection of floor(|train|/7) indices as a hyper-parameter holdout;
// the remainder is the search training set.
struct HyperparamSubset {
  std::vector<std::size_t> search_train;
  std::vector<std::size_t> holdout;
};
HyperparamSubset hyperparam_subset(const Split& fold1, std::uint64_t seed);

// Group-disjoint splits: distinct values of group_role sorted, cut into
// n_partitions contiguous blocks; split i tests on block i and trains on the
// rest. Test blocks are exhaustive and pairwise disjoint.
std::vector<Split> out_of_sample_splits(
    const std::vector<ReactionRecord>& records, const DatasetSchema& schema,
    const std::string& group_role, int n_partitions);

// Externally published train/test files; records are concatenated and the
// split indexes into the concatenation. Duplicate rows appearing on both
// sides are legal but counted.
struct PredefinedSplit {
  Dataset combined;
  Split split;
  std::size_t overlap_rows = 0;
};
PredefinedSplit load_predefined_split(const std::string& train_path,
                                      const std::string& test_path,
                                      const DatasetSchema& schema);

// Reaction string for the encoder: component SMILES joined by '.' in schema
// order, absent components as kNoneComponent.
std::string reaction_string(const ReactionRecord& record);

std::string group_value(const ReactionRecord& record,
                        const DatasetSchema& schema,
                        const std::string& group_role);

}  // namespace yieldcast::data
