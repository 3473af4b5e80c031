#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <attnmil/dataset.hpp>
#include <attnmil/error.hpp>
#include <attnmil/io.hpp>

#include "support/oracles.hpp"

using namespace attnmil;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "attnmil_test_dataset";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& text) {
  auto path = scratch(name);
  std::ofstream(path) << text;
  return path;
}

Bag make_bag(std::string id, int label, std::initializer_list<std::initializer_list<double>> rows) {
  Bag bag;
  bag.id = std::move(id);
  bag.label = label;
  bag.instances.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (auto row : rows) {
    Eigen::Index c = 0;
    for (double v : row) bag.instances(r, c++) = v;
    ++r;
  }
  return bag;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load_dataset groups rows by bag id in file order") {
  auto path = write_text("ten_rows.csv",
                         "bag_id,label,f0,f1\n"
                         "A,1,1,2\nB,0,3,4\nA,1,5,6\nC,0,7,8\nB,0,9,10\n"
                         "A,1,11,12\nC,0,13,14\nC,0,15,16\nA,1,17,18\nB,0,19,20\n");
  auto ds = load_dataset(path);
  REQUIRE(ds.bags.size() == 3);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.bags[0].id == "A");
  CHECK(ds.bags[0].size() == 4);
  CHECK(ds.bags[1].size() == 3);
  CHECK(ds.bags[2].size() == 3);
  CHECK(ds.bags[0].instances(1, 0) == 5.0);
  CHECK(ds.bags[2].instances(2, 1) == 16.0);
  CHECK(ds.feature_names == std::vector<std::string>{"f0", "f1"});
}

TEST_CASE("load_dataset rejects malformed input") {
  SUBCASE("conflicting labels name the bag") {
    auto path = write_text("conflict.csv", "bag_id,label,f0\nB7,0,1\nB7,1,2\n");
    CHECK(error_of([&] { load_dataset(path); }).find("B7") != std::string::npos);
  }
  SUBCASE("non-numeric cell reports the row") {
    auto path = write_text("bad_cell.csv", "bag_id,label,f0\nA,0,1\nA,0,x\n");
    CHECK(error_of([&] { load_dataset(path); }).find("row 3") != std::string::npos);
  }
  SUBCASE("missing cell reports the row") {
    auto path = write_text("missing.csv", "bag_id,label,f0,f1\nA,0,1,\n");
    CHECK(error_of([&] { load_dataset(path); }).find("row 2") != std::string::npos);
  }
  SUBCASE("no instances") {
    auto path = write_text("header_only.csv", "bag_id,label,f0\n");
    CHECK_THROWS_AS(load_dataset(path), Error);
  }
  SUBCASE("empty file") {
    auto path = write_text("empty.csv", "");
    CHECK_THROWS_AS(load_dataset(path), Error);
  }
  SUBCASE("declared dimension mismatch") {
    auto path = write_text("dim.csv", "bag_id,label,f0\nA,0,1\n");
    CHECK_THROWS_AS(load_dataset(path, 3), Error);
  }
  SUBCASE("non-finite feature") {
    auto path = write_text("nan.csv", "bag_id,label,f0\nA,0,nan\n");
    CHECK_THROWS_AS(load_dataset(path), Error);
  }
}

TEST_CASE("LIDC-shaped file keeps its bag and class counts") {
  // 110 subjects, 82 positive, 310 nodules in total.
  std::string text = "bag_id,label,f0\n";
  std::size_t rows = 0;
  for (int b = 0; b < 110; ++b) {
    const int n = b < 90 ? 3 : 2;  // 90*3 + 20*2 = 310
    for (int k = 0; k < n; ++k, ++rows) text += "S" + std::to_string(b) + "," + (b < 82 ? "1" : "0") + ",0.5\n";
  }
  REQUIRE(rows == 310);
  auto ds = load_dataset(write_text("lidc_shape.csv", text));
  CHECK(ds.bags.size() == 110);
  CHECK(ds.count_label(1) == 82);
  CHECK(ds.count_label(0) == 28);
}

TEST_CASE("save then load reproduces the dataset exactly") {
  SyntheticSpec spec;
  spec.n_pos = 5;
  spec.n_neg = 4;
  spec.feature_dim = 7;
  spec.n_signal_dims = 3;
  spec.seed = 99;
  auto ds = generate_synthetic(spec);
  auto path = scratch("roundtrip.csv");
  save_dataset(path, ds);
  auto back = load_dataset(path);
  REQUIRE(back.bags.size() == ds.bags.size());
  for (std::size_t i = 0; i < ds.bags.size(); ++i) CHECK(back.bags[i] == ds.bags[i]);

  io::write_file_atomic(witness_sidecar_path(path), format_witnesses(ds));
  CHECK(load_witnesses(witness_sidecar_path(path)) == ds.witnesses);
}

TEST_CASE("fit_standardizer") {
  SUBCASE("two points in one dimension") {
    std::vector<Bag> bags{make_bag("a", 0, {{0.0}}), make_bag("b", 1, {{2.0}})};
    auto s = fit_standardizer(bags);
    CHECK(s.means[0] == doctest::Approx(1.0));
    const std::vector<double> xs{0.0, 2.0};
    CHECK(s.stds[0] == doctest::Approx(std::sqrt(oracle::sample_variance(xs))).epsilon(1e-15));
    CHECK(s.stds[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("constant feature floors to one") {
    std::vector<Bag> bags{make_bag("a", 0, {{5.0, 1.0}, {5.0, 3.0}})};
    auto s = fit_standardizer(bags);
    CHECK(s.means[0] == 5.0);
    CHECK(s.stds[0] == 1.0);
  }
  SUBCASE("single instance") {
    std::vector<Bag> bags{make_bag("a", 0, {{4.0, -2.0}})};
    auto s = fit_standardizer(bags);
    CHECK(s.means[0] == 4.0);
    CHECK(s.means[1] == -2.0);
    CHECK(s.stds[0] == 1.0);
    CHECK(s.stds[1] == 1.0);
  }
  SUBCASE("empty input") {
    std::vector<Bag> none;
    CHECK_THROWS_AS(fit_standardizer(none), Error);
  }
}

TEST_CASE("apply_standardizer") {
  Standardizer s{Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
  auto out = apply_standardizer(s, make_bag("x", 1, {{3.0}}));
  CHECK(out.instances(0, 0) == 1.0);
  CHECK(out.id == "x");
  CHECK(out.label == 1);

  auto bag = make_bag("y", 0, {{1.5, -2.0}, {0.0, 7.0}});
  CHECK(apply_standardizer(Standardizer::identity(2), bag) == bag);
  CHECK_THROWS_AS(apply_standardizer(Standardizer::identity(3), bag), Error);
}

TEST_CASE("standardizing the fit set gives zero mean and unit sd, and refitting is idempotent") {
  SyntheticSpec spec;
  spec.n_pos = 10;
  spec.n_neg = 10;
  spec.feature_dim = 6;
  spec.n_signal_dims = 2;
  spec.seed = 3;
  auto ds = generate_synthetic(spec);
  // Scale features wildly so the test is not trivially near identity.
  for (auto& bag : ds.bags)
    for (Eigen::Index j = 0; j < bag.instances.cols(); ++j) bag.instances.col(j) = bag.instances.col(j) * std::pow(10.0, j) + Vector::Constant(bag.instances.rows(), 50.0 * j);
  auto s = fit_standardizer(ds.bags);
  auto z = apply_standardizer(s, ds.bags);
  auto refit = fit_standardizer(z);
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(std::abs(refit.means[j]) < 1e-9);
    CHECK(std::abs(refit.stds[j] - 1.0) < 1e-9);
  }
}

TEST_CASE("pad_bag_duplicate cycles instances") {
  auto bag = make_bag("p", 1, {{1.0}, {2.0}, {3.0}});
  auto padded = pad_bag_duplicate(bag, 12);
  REQUIRE(padded.size() == 12);
  for (Eigen::Index i = 0; i < 12; ++i) CHECK(padded.instances(i, 0) == static_cast<double>(i % 3 + 1));
  CHECK(padded.label == 1);
  CHECK(std::count(padded.padding.begin(), padded.padding.end(), true) == 9);
  CHECK(padded.original_size() == 3);
  CHECK(strip_padding(padded) == bag);

  auto full = make_bag("f", 0, {{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}, {10}, {11}, {12}});
  auto same = pad_bag_duplicate(full, 12);
  CHECK(same.instances == full.instances);
  CHECK(strip_padding(same) == full);

  auto single = pad_bag_duplicate(make_bag("s", 0, {{4.0, 5.0}}), 4);
  CHECK(single.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(single.instances.row(i) == single.instances.row(0));

  CHECK_THROWS_AS(pad_bag_duplicate(bag, 2), Error);
}

TEST_CASE("generate_synthetic") {
  SUBCASE("paper-shaped cohort") {
    SyntheticSpec spec;  // 82 / 28, D = 103, sizes 1..12
    spec.seed = 1;
    auto ds = generate_synthetic(spec);
    CHECK(ds.bags.size() == 110);
    CHECK(ds.count_label(1) == 82);
    CHECK(ds.feature_dim == 103);
    ds.validate();
    for (const auto& bag : ds.bags) {
      CHECK(bag.size() >= 1);
      CHECK(bag.size() <= 12);
      if (bag.label == 1) {
        REQUIRE(ds.witnesses.count(bag.id) == 1);
        REQUIRE(ds.witnesses.at(bag.id).size() == 1);
        CHECK(ds.witnesses.at(bag.id)[0] < bag.size());
      } else {
        CHECK(ds.witnesses.count(bag.id) == 0);
      }
    }
  }
  SUBCASE("deterministic in the seed") {
    SyntheticSpec spec;
    spec.seed = 42;
    CHECK(format_dataset(generate_synthetic(spec)) == format_dataset(generate_synthetic(spec)));
    auto other = spec;
    other.seed = 43;
    CHECK(format_dataset(generate_synthetic(spec)) != format_dataset(generate_synthetic(other)));
  }
  SUBCASE("the witness carries the shift") {
    SyntheticSpec spec;
    spec.n_pos = 200;
    spec.n_neg = 2;
    spec.feature_dim = 4;
    spec.n_signal_dims = 2;
    spec.witness_shift = 3.0;
    spec.seed = 5;
    auto ds = generate_synthetic(spec);
    double witness_mean = 0.0, tail_mean = 0.0;
    for (const auto& bag : ds.bags) {
      if (bag.label != 1) continue;
      auto w = static_cast<Eigen::Index>(ds.witnesses.at(bag.id)[0]);
      witness_mean += bag.instances(w, 0);
      tail_mean += bag.instances(w, 3);
    }
    CHECK(witness_mean / 200.0 == doctest::Approx(3.0).epsilon(0.1));
    CHECK(std::abs(tail_mean / 200.0) < 0.3);
  }
  SUBCASE("zero shift leaves the classes identically distributed") {
    SyntheticSpec spec;
    spec.n_pos = 300;
    spec.n_neg = 300;
    spec.feature_dim = 3;
    spec.n_signal_dims = 3;
    spec.witness_shift = 0.0;
    spec.seed = 8;
    auto ds = generate_synthetic(spec);
    double pos = 0, neg = 0;
    std::size_t np = 0, nn = 0;
    for (const auto& bag : ds.bags) {
      (bag.label ? pos : neg) += bag.instances.col(0).sum();
      (bag.label ? np : nn) += bag.size();
    }
    CHECK(std::abs(pos / np - neg / nn) < 0.1);
  }
  SUBCASE("invalid specs") {
    SyntheticSpec spec;
    spec.n_pos = 0;
    spec.n_neg = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
    spec = {};
    spec.min_bag_size = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
    spec = {};
    spec.min_bag_size = 5;
    spec.max_bag_size = 4;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
  }
}
