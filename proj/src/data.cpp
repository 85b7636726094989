#include "yieldcast/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "csv.hpp"
#include "yieldcast/smiles.hpp"

namespace yieldcast::data {

int DatasetSchema::role_index(const std::string& role) const {
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) return static_cast<int>(i);
  }
  return -1;
}

const DatasetSchema& buchwald_hartwig_schema() {
  static const DatasetSchema schema = {
      "buchwald_hartwig",
      {"aryl_halide", "ligand", "base", "additive"},
      {"ligand", "base", "additive"},
      {"aryl_halide"},
  };
  return schema;
}

const DatasetSchema& suzuki_miyaura_schema() {
  static const DatasetSchema schema = {
      "suzuki_miyaura",
      {"electrophile", "nucleophile", "ligand", "reagent", "solvent"},
      {"ligand", "reagent", "solvent"},
      {"electrophile", "nucleophile"},
  };
  return schema;
}

const DatasetSchema& schema_by_name(const std::string& name) {
  if (name == "buchwald_hartwig") return buchwald_hartwig_schema();
  if (name == "suzuki_miyaura") return suzuki_miyaura_schema();
  fail(ErrorCode::InvalidConfig,
       "unknown schema \"" + name +
           "\" (expected buchwald_hartwig or suzuki_miyaura)");
}

namespace {

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  auto csv = csvutil::read_csv(path);

  std::vector<int> smiles_cols;
  std::vector<int> name_cols;
  for (const auto& role : schema.roles) {
    int col = find_column(csv.header, role + "_smiles");
    if (col < 0) {
      fail(ErrorCode::MissingColumn,
           "missing column \"" + role + "_smiles\" in " + path);
    }
    smiles_cols.push_back(col);
    name_cols.push_back(find_column(csv.header, role + "_name"));
  }
  int yield_col = find_column(csv.header, "yield");
  if (yield_col < 0) {
    fail(ErrorCode::MissingColumn, "missing column \"yield\" in " + path);
  }

  const std::set<std::string> condition_roles(schema.condition_roles.begin(),
                                              schema.condition_roles.end());

  Dataset out;
  out.schema = schema;
  out.records.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    ReactionRecord record;
    for (std::size_t i = 0; i < schema.roles.size(); ++i) {
      Component component;
      component.role = schema.roles[i];
      component.smiles = row[static_cast<std::size_t>(smiles_cols[i])];
      if (component.smiles.empty()) {
        if (condition_roles.count(component.role) == 0) {
          fail(ErrorCode::MalformedCsv,
               "empty SMILES for reactant role " + component.role +
                   " at data row " + std::to_string(r + 1));
        }
        component.smiles = kNoneComponent;
      }
      smiles::tokenize(component.smiles);  // reject malformed inputs at load
      if (name_cols[i] >= 0) {
        component.name = row[static_cast<std::size_t>(name_cols[i])];
      }
      record.components.push_back(std::move(component));
    }

    const std::string& ytext = row[static_cast<std::size_t>(yield_col)];
    double raw = 0.0;
    auto [ptr, ec] =
        std::from_chars(ytext.data(), ytext.data() + ytext.size(), raw);
    if (ec != std::errc() || ptr != ytext.data() + ytext.size() ||
        !std::isfinite(raw)) {
      fail(ErrorCode::UnparseableYield, "cannot parse yield \"" + ytext +
                                            "\" at data row " +
                                            std::to_string(r + 1));
    }
    record.raw_yield = raw;
    double fraction = raw / 100.0;
    if (fraction < 0.0 || fraction > 1.0) {
      fraction = std::clamp(fraction, 0.0, 1.0);
      ++out.clamped_rows;
    }
    record.yield_fraction = fraction;
    out.records.push_back(std::move(record));
  }
  return out;
}

std::vector<Split> random_folds(int n, double ratio, std::uint64_t seed,
                                std::size_t size) {
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    fail(ErrorCode::InvalidRatio,
         "ratio must lie in (0,1), got " + std::to_string(ratio));
  }
  if (n < 1) {
    fail(ErrorCode::InvalidConfig, "need at least one fold");
  }
  if (size < 2) {
    fail(ErrorCode::TooSmall, "cannot split fewer than 2 rows");
  }
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(size)));
  std::vector<Split> folds;
  folds.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    std::vector<std::size_t> order(size);
    for (std::size_t i = 0; i < size; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0xF01D, static_cast<std::uint64_t>(f)));
    rng.shuffle(order);
    Split split;
    split.train.assign(order.begin(),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

HyperparamSubset hyperparam_subset(const Split& fold1, std::uint64_t seed) {
  if (fold1.train.size() < 7) {
    fail(ErrorCode::TooSmall,
         "training set of " + std::to_string(fold1.train.size()) +
             " rows cannot spare a 1/7 holdout");
  }
  const std::size_t n_holdout = fold1.train.size() / 7;
  std::vector<std::size_t> order = fold1.train;
  Rng rng(mix_seed(seed, 0x5EA7));
  rng.shuffle(order);
  HyperparamSubset out;
  out.holdout.assign(order.begin(),
                     order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  out.search_train.assign(
      order.begin() + static_cast<std::ptrdiff_t>(n_holdout), order.end());
  return out;
}

std::string group_value(const ReactionRecord& record,
                        const DatasetSchema& schema,
                        const std::string& group_role) {
  if (schema.role_index(group_role) < 0) {
    fail(ErrorCode::InvalidConfig,
         "role \"" + group_role + "\" not in schema " + schema.name);
  }
  for (const auto& component : record.components) {
    if (component.role == group_role) return component.smiles;
  }
  fail(ErrorCode::InvalidConfig,
       "record lacks role \"" + group_role + "\"");
}

std::vector<Split> out_of_sample_splits(
    const std::vector<ReactionRecord>& records, const DatasetSchema& schema,
    const std::string& group_role, int n_partitions) {
  if (n_partitions < 1) {
    fail(ErrorCode::InvalidConfig, "need at least one partition");
  }
  std::set<std::string> distinct;
  for (const auto& record : records) {
    distinct.insert(group_value(record, schema, group_role));
  }
  if (distinct.size() < static_cast<std::size_t>(n_partitions)) {
    fail(ErrorCode::TooFewGroups,
         std::to_string(distinct.size()) + " distinct " + group_role +
             " values cannot fill " + std::to_string(n_partitions) +
             " partitions");
  }
  // std::set iteration is already the deterministic sorted order.
  std::vector<std::string> groups(distinct.begin(), distinct.end());
  const std::size_t q = groups.size() / static_cast<std::size_t>(n_partitions);
  const std::size_t rem = groups.size() % static_cast<std::size_t>(n_partitions);

  std::vector<Split> splits;
  std::size_t begin = 0;
  for (int p = 0; p < n_partitions; ++p) {
    const std::size_t block = q + (static_cast<std::size_t>(p) < rem ? 1 : 0);
    std::set<std::string> test_groups(groups.begin() + begin,
                                      groups.begin() + begin + block);
    begin += block;
    Split split;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string value = group_value(records[i], schema, group_role);
      if (test_groups.count(value) > 0) {
        split.test.push_back(i);
      } else {
        split.train.push_back(i);
      }
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

namespace {

std::string record_key(const ReactionRecord& record) {
  std::string key;
  for (const auto& component : record.components) {
    key += component.smiles;
    key += '\x1f';
  }
  key += std::to_string(record.raw_yield);
  return key;
}

}  // namespace

PredefinedSplit load_predefined_split(const std::string& train_path,
                                      const std::string& test_path,
                                      const DatasetSchema& schema) {
  Dataset train = load_dataset(train_path, schema);
  Dataset test = load_dataset(test_path, schema);
  if (test.records.empty()) {
    fail(ErrorCode::EmptySplit, "test file has no rows: " + test_path);
  }
  if (train.records.empty()) {
    fail(ErrorCode::EmptySplit, "train file has no rows: " + train_path);
  }

  std::set<std::string> train_keys;
  for (const auto& record : train.records) {
    train_keys.insert(record_key(record));
  }

  PredefinedSplit out;
  out.combined.schema = schema;
  out.combined.clamped_rows = train.clamped_rows + test.clamped_rows;
  out.combined.records = std::move(train.records);
  for (std::size_t i = 0; i < out.combined.records.size(); ++i) {
    out.split.train.push_back(i);
  }
  for (auto& record : test.records) {
    if (train_keys.count(record_key(record)) > 0) ++out.overlap_rows;
    out.split.test.push_back(out.combined.records.size());
    out.combined.records.push_back(std::move(record));
  }
  return out;
}

std::string reaction_string(const ReactionRecord& record) {
  std::vector<std::string> parts;
  parts.reserve(record.components.size());
  for (const auto& component : record.components) {
    parts.push_back(component.smiles);
  }
  return smiles::assemble_reaction(parts);
}

}  // namespace yieldcast::data
