#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"
#include "yieldcast/data.hpp"
#include "yieldcast/smiles.hpp"

// Descriptor channel: fixed-layout numeric vectors per reaction, either
// ingested from a CSV table (the DFT-style route) or computed from the
// molecular graph (the structural fallback).

namespace yieldcast::descriptors {

struct DescriptorVector {
  std::vector<double> values;
  std::string layout_id;

  std::size_t size() const { return values.size(); }
};

struct DescriptorTable {
  std::map<std::string, std::vector<double>> by_smiles;
  std::string layout_id;
  std::size_t width = 0;
};

// Structural layout, 25 values:
//   [0..15]  element counts over {B,C,N,O,P,S,F,Cl,Br,I,Si,Sn,Zn,Pd,K,Na}
//   [16]     other-element count
//   [17..20] bond counts by order (single, double, triple, aromatic)
//   [21]     ring count
//   [22]     aromatic-atom count
//   [23]     total atom count
//   [24]     heteroatom fraction (atoms neither C nor H, over all atoms)
inline constexpr std::size_t kStructuralWidth = 25;
inline const std::string kStructuralLayoutId = "structural-v1";

DescriptorVector structural_descriptors(const smiles::Molecule& m);

// CSV `smiles,<name1>,...,<nameK>`. Errors: MalformedCsv, InconsistentWidth,
// NonFiniteValue (names the row), DuplicateKey. layout_id is derived from a
// hash of the header.
DescriptorTable load_descriptor_table(const std::string& path);

// Concatenation of per-component vectors in schema order. With a table every
// component must be present (MissingCompound); without one the structural
// descriptors of the parsed component are used.
DescriptorVector reaction_descriptor(const data::ReactionRecord& record,
                                     const DescriptorTable* table);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // strictly positive; constant dims forced to 1
};

// Per-dimension mean and population std over the training vectors.
Normalizer fit_normalizer(const std::vector<DescriptorVector>& train);

DescriptorVector normalize(const DescriptorVector& v, const Normalizer& n);

}  // namespace yieldcast::descriptors
