#include <stdexcept>

#include "doctest.h"
#include "isac/types.hpp"

using namespace isac;

TEST_CASE("GroupLayout partitions rows") {
  const GroupLayout per = GroupLayout::per_row(5);
  CHECK(per.n_groups == 5);
  CHECK(per.rows_per_group == 1);
  CHECK(per.n_rows() == 5);
  CHECK(per.first_row(3) == 3);

  const GroupLayout sub = GroupLayout::grouped(8, 4);
  CHECK(sub.n_groups == 4);
  CHECK(sub.rows_per_group == 2);
  CHECK(sub.first_row(2) == 4);

  CHECK_THROWS_AS(GroupLayout::grouped(8, 3), std::invalid_argument);
  CHECK_THROWS_AS(GroupLayout::grouped(8, 0), std::invalid_argument);
}

TEST_CASE("SelectionMask counting and indexing") {
  SelectionMask m(4);
  CHECK(m.count() == 4);
  m.set(1, false);
  m.set(3, false);
  CHECK(m.count() == 2);
  CHECK(m[0]);
  CHECK_FALSE(m[1]);
  CHECK(m.active_indices() == std::vector<int>{0, 2});

  SelectionMask same(4);
  same.set(1, false);
  same.set(3, false);
  CHECK(m == same);
  same.set(3, true);
  CHECK_FALSE(m == same);

  CHECK(SelectionMask(3, false).count() == 0);
}

TEST_CASE("PrecoderSet norms against hand-computed values") {
  // Two subcarriers, 2 antennas, 2 columns with simple integer entries:
  //   F_0 = [1  i; 0  2],  F_1 = [0 0; 3 0].
  PrecoderSet f(2, 2, 2);
  f.mats[0] << Complex(1, 0), Complex(0, 1), Complex(0, 0), Complex(2, 0);
  f.mats[1] << Complex(0, 0), Complex(0, 0), Complex(3, 0), Complex(0, 0);

  CHECK(f.n_sub() == 2);
  CHECK(f.n_tx() == 2);
  CHECK(f.n_cols() == 2);
  CHECK(f.total_tx_power() == doctest::Approx(15.0));          // 1+1+4+9
  CHECK(f.stacked_row_norm(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f.stacked_row_norm(1) == doctest::Approx(std::sqrt(13.0)));

  const GroupLayout rows = GroupLayout::per_row(2);
  CHECK(f.group_norm(rows, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f.group_norm(rows, 1) == doctest::Approx(std::sqrt(13.0)));
  const RVec norms = f.group_norms(rows);
  CHECK(norms.size() == 2);
  CHECK(norms[1] == doctest::Approx(std::sqrt(13.0)));

  const GroupLayout whole = GroupLayout::grouped(2, 1);
  CHECK(f.group_norm(whole, 0) == doctest::Approx(std::sqrt(15.0)));

  // user_block picks the per-user column slice (n_s = 1 here).
  f.user_block(0, 1, 1).setConstant(Complex(5, 0));
  CHECK(f.mats[0](0, 1) == Complex(5, 0));
  CHECK(f.mats[0](0, 0) == Complex(1, 0));

  f.set_zero();
  CHECK(f.total_tx_power() == 0.0);
}

TEST_CASE("HybridPrecoder masks digital rows before the analog product") {
  HybridPrecoder h;
  h.architecture = Architecture::FC;
  h.analog = CMat(2, 2);
  h.analog << std::polar(1.0, 0.3), Complex(0, 0),
              std::polar(1.0, -1.1), Complex(0, 0);
  h.digital = {CMat(2, 1)};
  h.digital[0] << Complex(2, 0), Complex(7, 0);  // row 1 must be ignored
  h.mask = SelectionMask(2);
  h.mask.set(1, false);

  const PrecoderSet eff = h.effective_fd();
  CHECK(eff.n_sub() == 1);
  const CMat expected = h.analog.col(0) * Complex(2, 0);
  CHECK((eff.mats[0] - expected).norm() == doctest::Approx(0.0));
  CHECK(h.product_power() == doctest::Approx(expected.squaredNorm()));
  CHECK_NOTHROW(h.validate());
}

TEST_CASE("HybridPrecoder validate rejects malformed analog matrices") {
  HybridPrecoder h;
  h.architecture = Architecture::FC;
  h.analog = CMat::Constant(3, 2, Complex(1, 0));
  h.digital = {CMat::Zero(2, 1)};
  h.mask = SelectionMask(2);
  CHECK_NOTHROW(h.validate());

  SUBCASE("non-unit-modulus active entry") {
    h.analog(0, 0) = Complex(0.5, 0);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  }
  SUBCASE("inactive column must be zero") {
    h.mask.set(1, false);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h.analog.col(1).setZero();
    CHECK_NOTHROW(h.validate());
  }
  SUBCASE("mask size must match chain count") {
    h.mask = SelectionMask(3);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  }
}

TEST_CASE("HybridPrecoder validate enforces the PC block structure") {
  // 4 antennas, 2 chains, subarrays of 2 rows each.
  HybridPrecoder h;
  h.architecture = Architecture::PC;
  h.analog = CMat::Zero(4, 2);
  h.analog(0, 0) = std::polar(1.0, 0.2);
  h.analog(1, 0) = std::polar(1.0, 1.9);
  h.analog(2, 1) = Complex(1, 0);
  h.analog(3, 1) = Complex(0, 1);
  h.digital = {CMat::Zero(2, 1)};
  h.mask = SelectionMask(2);
  CHECK_NOTHROW(h.validate());

  SUBCASE("entry outside the diagonal block") {
    h.analog(0, 1) = Complex(1, 0);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  }
  SUBCASE("inactive block must be zeroed") {
    h.mask.set(0, false);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h.analog.col(0).setZero();
    CHECK_NOTHROW(h.validate());
  }
  SUBCASE("chain count must divide the array") {
    h.analog = CMat::Zero(4, 3);
    h.mask = SelectionMask(3, false);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  }
}

TEST_CASE("Architecture names") {
  CHECK(std::string(to_string(Architecture::FD)) == "fd");
  CHECK(std::string(to_string(Architecture::FC)) == "fc");
  CHECK(std::string(to_string(Architecture::PC)) == "pc");
}
