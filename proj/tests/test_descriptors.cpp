#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "yieldcast/common.hpp"
#include "yieldcast/data.hpp"
#include "yieldcast/descriptors.hpp"
#include "yieldcast/smiles.hpp"

using namespace yieldcast;
using namespace yieldcast::descriptors;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "yieldcast_desc_test";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::ofstream out(path);
  out << content;
  return path;
}

data::ReactionRecord make_record(const std::vector<std::string>& smiles_list) {
  data::ReactionRecord record;
  for (std::size_t i = 0; i < smiles_list.size(); ++i) {
    record.components.push_back({"role" + std::to_string(i), smiles_list[i], ""});
  }
  return record;
}

}  // namespace

TEST_CASE("structural descriptors: ethanol counted by hand") {
  auto v = structural_descriptors(smiles::parse("CCO"));
  REQUIRE(v.size() == kStructuralWidth);
  CHECK(v.values[1] == 2.0);   // C
  CHECK(v.values[3] == 1.0);   // O
  CHECK(v.values[17] == 2.0);  // single bonds
  CHECK(v.values[23] == 3.0);  // atoms
  CHECK(v.values[24] == doctest::Approx(1.0 / 3.0));
  // everything else zero
  for (std::size_t i : {0u, 2u, 4u, 5u, 6u, 7u, 8u, 9u, 10u, 11u, 12u, 13u,
                        14u, 15u, 16u, 18u, 19u, 20u, 21u, 22u}) {
    CHECK(v.values[i] == 0.0);
  }
}

TEST_CASE("structural descriptors: benzene counted by hand") {
  auto v = structural_descriptors(smiles::parse("c1ccccc1"));
  CHECK(v.values[1] == 6.0);   // C
  CHECK(v.values[20] == 6.0);  // aromatic bonds
  CHECK(v.values[21] == 1.0);  // rings
  CHECK(v.values[22] == 6.0);  // aromatic atoms
  CHECK(v.values[24] == 0.0);  // no heteroatoms
}

TEST_CASE("structural descriptors: empty molecule is the zero vector") {
  smiles::Molecule empty;
  auto v = structural_descriptors(empty);
  for (double x : v.values) CHECK(x == 0.0);
}

TEST_CASE("structural descriptors: other-element bucket") {
  auto v = structural_descriptors(smiles::parse("[Fe][Pd]"));
  CHECK(v.values[13] == 1.0);  // Pd
  CHECK(v.values[16] == 1.0);  // Fe -> other
  CHECK(v.values[24] == 1.0);  // both heteroatoms
}

TEST_CASE("load_descriptor_table: plain read") {
  auto path = write_temp("ok.csv",
                         "smiles,e_homo,e_lumo,dipole\n"
                         "CCO,-0.31,0.12,1.7\n"
                         "CC,-0.35,0.15,0.0\n");
  auto table = load_descriptor_table(path.string());
  CHECK(table.width == 3);
  CHECK(table.by_smiles.size() == 2);
  CHECK(table.by_smiles.at("CCO")[2] == doctest::Approx(1.7));
  CHECK(table.layout_id.substr(0, 4) == "csv-");
}

TEST_CASE("load_descriptor_table: error taxonomy") {
  auto nan_path = write_temp("nan.csv", "smiles,a\nCCO,NaN\n");
  CHECK_THROWS_WITH_AS(load_descriptor_table(nan_path.string()),
                       doctest::Contains("NonFiniteValue"), Error);

  auto dup_path = write_temp("dup.csv", "smiles,a\nCCO,1\nCCO,2\n");
  CHECK_THROWS_WITH_AS(load_descriptor_table(dup_path.string()),
                       doctest::Contains("DuplicateKey"), Error);

  auto jagged_path = write_temp("jagged.csv", "smiles,a,b\nCCO,1\n");
  CHECK_THROWS_WITH_AS(load_descriptor_table(jagged_path.string()),
                       doctest::Contains("InconsistentWidth"), Error);

  auto noheader_path = write_temp("nohdr.csv", "name,a\nCCO,1\n");
  CHECK_THROWS_WITH_AS(load_descriptor_table(noheader_path.string()),
                       doctest::Contains("MalformedCsv"), Error);

  auto text_path = write_temp("text.csv", "smiles,a\nCCO,abc\n");
  CHECK_THROWS_AS(load_descriptor_table(text_path.string()), Error);
}

TEST_CASE("reaction_descriptor: table route concatenates in order") {
  auto path = write_temp("tab.csv",
                         "smiles,a,b,c\n"
                         "CC,1,2,3\n"
                         "CO,4,5,6\n"
                         "CN,7,8,9\n"
                         "CF,10,11,12\n");
  auto table = load_descriptor_table(path.string());
  auto record = make_record({"CC", "CO", "CN", "CF"});
  auto v = reaction_descriptor(record, &table);
  CHECK(v.size() == 12);
  CHECK(v.values == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});

  auto permuted = make_record({"CO", "CC", "CN", "CF"});
  auto vp = reaction_descriptor(permuted, &table);
  CHECK(vp.values != v.values);

  auto missing = make_record({"CC", "CO", "CN", "CCl"});
  CHECK_THROWS_WITH_AS(reaction_descriptor(missing, &table),
                       doctest::Contains("MissingCompound"), Error);
}

TEST_CASE("reaction_descriptor: structural fallback width") {
  auto record = make_record({"CCO", "c1ccccc1", "CC", "O"});
  auto v = reaction_descriptor(record, nullptr);
  CHECK(v.size() == 4 * kStructuralWidth);
  CHECK(v.size() == 100);
}

TEST_CASE("fit_normalizer: hand arithmetic") {
  DescriptorVector a{{0.0}, "t"};
  DescriptorVector b{{2.0}, "t"};
  auto n = fit_normalizer({a, b});
  CHECK(n.mean[0] == doctest::Approx(1.0));
  CHECK(n.stddev[0] == doctest::Approx(1.0));  // population std of {0,2}

  DescriptorVector c5{{5.0}, "t"};
  auto constant = fit_normalizer({c5, c5});
  CHECK(constant.mean[0] == 5.0);
  CHECK(constant.stddev[0] == 1.0);  // zero-variance rule

  auto single = fit_normalizer({DescriptorVector{{3.0, -1.0}, "t"}});
  CHECK(single.mean == std::vector<double>{3.0, -1.0});
  CHECK(single.stddev == std::vector<double>{1.0, 1.0});

  CHECK_THROWS_AS(fit_normalizer({}), Error);
}

TEST_CASE("normalize: hand arithmetic and errors") {
  Normalizer n{{1.0}, {2.0}};
  auto out = normalize(DescriptorVector{{3.0}, "t"}, n);
  CHECK(out.values[0] == doctest::Approx(1.0));

  auto zero = normalize(DescriptorVector{{1.0}, "t"}, n);
  CHECK(zero.values[0] == 0.0);

  CHECK_THROWS_WITH_AS(normalize(DescriptorVector{{1.0, 2.0}, "t"}, n),
                       doctest::Contains("LengthMismatch"), Error);
}

TEST_CASE("property: z-scores of the fitted set have mean 0 and unit std") {
  Rng rng(71);
  std::vector<DescriptorVector> vecs;
  const std::size_t dim = 7;
  for (int i = 0; i < 40; ++i) {
    DescriptorVector v;
    v.layout_id = "t";
    for (std::size_t d = 0; d < dim; ++d) {
      v.values.push_back(d == 3 ? 4.2 : rng.next_unit() * 10.0 - 5.0);
    }
    vecs.push_back(std::move(v));
  }
  auto n = fit_normalizer(vecs);
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto& v : vecs) {
    auto z = normalize(v, n);
    for (std::size_t d = 0; d < dim; ++d) mean[d] += z.values[d];
  }
  for (auto& m : mean) m /= static_cast<double>(vecs.size());
  for (const auto& v : vecs) {
    auto z = normalize(v, n);
    for (std::size_t d = 0; d < dim; ++d) {
      var[d] += (z.values[d] - mean[d]) * (z.values[d] - mean[d]);
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    CHECK(std::abs(mean[d]) < 1e-9);
    var[d] /= static_cast<double>(vecs.size());
    if (d != 3) CHECK(var[d] == doctest::Approx(1.0).epsilon(1e-9));
    if (d == 3) CHECK(var[d] == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("structural descriptors are a pure function of the molecule") {
  auto v1 = structural_descriptors(smiles::parse("N#Cc1ccc(Br)cc1"));
  auto v2 = structural_descriptors(smiles::parse("N#Cc1ccc(Br)cc1"));
  CHECK(v1.values == v2.values);
}
