#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "opau/fit.hpp"
#include "opau/serialize.hpp"
#include "opau/table10.hpp"

using namespace opau;

namespace {

// Worst-case |G - LeakyReLU(0.01)| of each bundle over a 1000-point grid on
// [-3, 3], recomputed independently from the published coefficients.
double reference_error(BasisKind kind) {
  switch (kind) {
    case BasisKind::CP1: return 0.10395051179952307;
    case BasisKind::CP2: return 0.096929974484629977;
    case BasisKind::LAU: return 0.17532044581070272;
    case BasisKind::LEG: return 0.8059218272848091;
    case BasisKind::HP1: return 0.12271795338078251;
    case BasisKind::HP2: return 0.10584273598811107;
  }
  throw std::logic_error("unreachable basis kind");
}

double max_grid_error(const OpauParams& p) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = -3.0 + 6.0 * i / 999.0;
    const double target = baseline_forward(Baseline::LeakyReLU, x, 0.01);
    worst = std::max(worst, std::abs(opau_forward(p, x) - target));
  }
  return worst;
}

}  // namespace

TEST_CASE("every bundle is a well-formed safe degree-(5,4) parameter set") {
  for (BasisKind kind : all_bases) {
    const OpauParams p = bundled_table10(kind);
    CHECK(p.basis == kind);
    CHECK(p.k == 5);
    CHECK(p.l == 4);
    CHECK(p.safe);
    CHECK_NOTHROW(p.validate());
  }
}

TEST_CASE("bundles approximate leaky relu at their published accuracy") {
  for (BasisKind kind : all_bases) {
    const double err = max_grid_error(bundled_table10(kind));
    CHECK_MESSAGE(err == doctest::Approx(reference_error(kind)).epsilon(1e-9),
                  to_string(kind));
  }
}

TEST_CASE("pinned values of the probabilists'-Hermite bundle") {
  const OpauParams p = bundled_table10(BasisKind::HP1);
  CHECK(opau_forward(p, 0.0) == doctest::Approx(0.12414245602365195).epsilon(1e-12));
  CHECK(opau_forward(p, 2.0) == doctest::Approx(2.0163848875976411).epsilon(1e-12));
  CHECK(zero_center_residual(p) == doctest::Approx(0.16327502723522933).epsilon(1e-12));
}

TEST_CASE("shipped coefficient files are bit-identical to the bundles") {
  for (BasisKind kind : all_bases) {
    std::string name = to_string(kind);
    for (char& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const OpauParams disk =
        load_opau_params(std::string(OPAU_DATA_DIR) + "/table10_" + name + ".json");
    const OpauParams mem = bundled_table10(kind);
    CHECK(disk.basis == mem.basis);
    CHECK(disk.k == mem.k);
    CHECK(disk.l == mem.l);
    CHECK(disk.safe == mem.safe);
    for (int i = 0; i <= mem.k; ++i) CHECK(disk.c[i] == mem.c[i]);
    for (int j = 0; j < mem.l; ++j) CHECK(disk.d[j] == mem.d[j]);
  }
}
