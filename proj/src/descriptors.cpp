#include "yieldcast/descriptors.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "csv.hpp"
#include "yieldcast/kernels.hpp"

namespace yieldcast::descriptors {

namespace {

const std::array<std::string, 16> kElementAlphabet = {
    "B", "C", "N", "O", "P", "S", "F", "Cl",
    "Br", "I", "Si", "Sn", "Zn", "Pd", "K", "Na"};

double parse_double(const std::string& text, std::size_t row,
                    const std::string& column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::MalformedCsv, "cannot parse \"" + text + "\" in column " +
                                      column + ", data row " +
                                      std::to_string(row));
  }
  if (!std::isfinite(value)) {
    fail(ErrorCode::NonFiniteValue, "non-finite value \"" + text +
                                        "\" in column " + column +
                                        ", data row " + std::to_string(row));
  }
  return value;
}

std::string header_hash(const std::vector<std::string>& header) {
  // FNV-1a over the joined header names.
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& name : header) {
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= static_cast<unsigned char>(',');
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("csv-") + buf;
}

}  // namespace

DescriptorVector structural_descriptors(const smiles::Molecule& m) {
  DescriptorVector out;
  out.layout_id = kStructuralLayoutId;
  out.values.assign(kStructuralWidth, 0.0);

  std::size_t heteroatoms = 0;
  for (const auto& atom : m.atoms) {
    bool counted = false;
    for (std::size_t e = 0; e < kElementAlphabet.size(); ++e) {
      if (atom.element == kElementAlphabet[e]) {
        out.values[e] += 1.0;
        counted = true;
        break;
      }
    }
    if (!counted) out.values[16] += 1.0;
    if (atom.aromatic) out.values[22] += 1.0;
    if (atom.element != "C" && atom.element != "H") ++heteroatoms;
  }
  for (const auto& bond : m.bonds) {
    switch (bond.order) {
      case smiles::BondOrder::Single: out.values[17] += 1.0; break;
      case smiles::BondOrder::Double: out.values[18] += 1.0; break;
      case smiles::BondOrder::Triple: out.values[19] += 1.0; break;
      case smiles::BondOrder::Aromatic: out.values[20] += 1.0; break;
    }
  }
  out.values[21] = static_cast<double>(m.ring_count);
  out.values[23] = static_cast<double>(m.atoms.size());
  out.values[24] = m.atoms.empty() ? 0.0
                                   : static_cast<double>(heteroatoms) /
                                         static_cast<double>(m.atoms.size());
  return out;
}

DescriptorTable load_descriptor_table(const std::string& path) {
  auto csv = csvutil::read_csv(path, ErrorCode::InconsistentWidth);
  if (csv.header.size() < 2 || csv.header[0] != "smiles") {
    fail(ErrorCode::MalformedCsv,
         "descriptor table header must be `smiles,<name1>,...`: " + path);
  }
  DescriptorTable table;
  table.width = csv.header.size() - 1;
  table.layout_id = header_hash(csv.header);
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string& key = row[0];
    smiles::tokenize(key);  // keys must be valid SMILES
    if (table.by_smiles.count(key) > 0) {
      fail(ErrorCode::DuplicateKey,
           "duplicate compound \"" + key + "\" at data row " +
               std::to_string(r + 1));
    }
    std::vector<double> values(table.width);
    for (std::size_t c = 0; c < table.width; ++c) {
      values[c] = parse_double(row[c + 1], r + 1, csv.header[c + 1]);
    }
    table.by_smiles.emplace(key, std::move(values));
  }
  return table;
}

DescriptorVector reaction_descriptor(const data::ReactionRecord& record,
                                     const DescriptorTable* table) {
  DescriptorVector out;
  const std::size_t per =
      table != nullptr ? table->width : kStructuralWidth;
  out.values.reserve(record.components.size() * per);
  for (const auto& component : record.components) {
    if (table != nullptr) {
      auto it = table->by_smiles.find(component.smiles);
      if (it == table->by_smiles.end()) {
        fail(ErrorCode::MissingCompound,
             "no descriptor row for " + component.role + " \"" +
                 component.smiles + "\"");
      }
      out.values.insert(out.values.end(), it->second.begin(), it->second.end());
    } else {
      auto sd = structural_descriptors(smiles::parse(component.smiles));
      out.values.insert(out.values.end(), sd.values.begin(), sd.values.end());
    }
  }
  const std::string base = table != nullptr ? table->layout_id
                                            : kStructuralLayoutId;
  out.layout_id = base + "x" + std::to_string(record.components.size());
  return out;
}

Normalizer fit_normalizer(const std::vector<DescriptorVector>& train) {
  if (train.empty()) {
    fail(ErrorCode::EmptyInput, "no vectors to fit a normalizer on");
  }
  const std::size_t dim = train[0].size();
  for (const auto& v : train) {
    if (v.size() != dim) {
      fail(ErrorCode::LengthMismatch,
           "descriptor vectors of width " + std::to_string(v.size()) +
               " and " + std::to_string(dim) + " in one fit");
    }
  }
  Normalizer n;
  n.mean.assign(dim, 0.0);
  n.stddev.assign(dim, 0.0);
  const double inv = 1.0 / static_cast<double>(train.size());
  for (const auto& v : train) {
    kernels::axpy(inv, v.values.data(), n.mean.data(), dim);
  }
  for (const auto& v : train) {
    for (std::size_t i = 0; i < dim; ++i) {
      double d = v.values[i] - n.mean[i];
      n.stddev[i] += inv * d * d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double sd = std::sqrt(n.stddev[i]);
    // Constant columns (exactly or to rounding) carry no signal; force 1 so
    // their z-scores are ~0 instead of blowing up.
    n.stddev[i] =
        sd <= 1e-12 * std::max(1.0, std::abs(n.mean[i])) ? 1.0 : sd;
  }
  return n;
}

DescriptorVector normalize(const DescriptorVector& v, const Normalizer& n) {
  if (v.size() != n.mean.size()) {
    fail(ErrorCode::LengthMismatch,
         "vector of width " + std::to_string(v.size()) +
             " vs normalizer of width " + std::to_string(n.mean.size()));
  }
  DescriptorVector out;
  out.layout_id = v.layout_id;
  out.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.values[i] = (v.values[i] - n.mean[i]) / n.stddev[i];
  }
  return out;
}

}  // namespace yieldcast::descriptors
