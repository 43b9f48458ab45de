#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "iscap/channel.hpp"

using namespace iscap;

TEST_CASE("path gain follows the distance law") {
  // g = 10^(ref/10) * d^-exp, frozen reference points.
  CHECK(path_gain(1.0, 2.0, -30.0) == Catch::Approx(1e-3).epsilon(1e-12));
  CHECK(path_gain(10.0, 2.0, -30.0) == Catch::Approx(1e-5).epsilon(1e-12));
  CHECK(path_gain(10.0, 4.0, -30.0) == Catch::Approx(1e-7).epsilon(1e-12));
  // Monotone in distance and exponent beyond 1 m.
  CHECK(path_gain(20.0, 2.2, -15.0) < path_gain(10.0, 2.2, -15.0));
  CHECK(path_gain(10.0, 3.6, -15.0) < path_gain(10.0, 2.2, -15.0));
  CHECK_THROWS_AS(path_gain(0.0, 2.0, -30.0), std::invalid_argument);
  CHECK_THROWS_AS(path_gain(-1.0, 2.0, -30.0), std::invalid_argument);
}

TEST_CASE("steering vectors") {
  const auto a0 = steering_vector(4, 0.0);
  for (int i = 0; i < 4; ++i) CHECK(a0[i] == cxd(1.0, 0.0));

  const auto api = steering_vector(2, pi);
  CHECK(api[0].real() == Catch::Approx(1.0));
  CHECK(api[1].real() == Catch::Approx(-1.0).margin(1e-12));
  CHECK(std::abs(api[1].imag()) < 1e-12);

  const auto a = steering_vector(64, 0.7321);
  CHECK(a[0] == cxd(1.0, 0.0));  // first entry is always 1
  for (int i = 0; i < 64; ++i)
    CHECK(std::abs(a[i]) == Catch::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(steering_vector(0, 0.3), std::invalid_argument);
}

TEST_CASE("spatial frequency uses the azimuth only") {
  CHECK(spatial_frequency(0.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(spatial_frequency(pi / 2.0) == Catch::Approx(pi));
  CHECK(spatial_frequency(-pi / 6.0) == Catch::Approx(-pi / 2.0));
}

TEST_CASE("rician sampling limits") {
  Rng rng(11);
  const Eigen::MatrixXcd los = Eigen::MatrixXcd::Ones(3, 2);

  SECTION("huge K collapses onto the LoS component") {
    const auto h = sample_rician(3, 2, 1e12, los, 4.0, rng);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i)
        CHECK(std::abs(h(i, j) - 2.0 * los(i, j)) < 1e-4);
  }

  SECTION("K=0 is Rayleigh with the requested mean power") {
    // 1e5 entries; |h|^2/gain has unit mean and unit variance, so the
    // empirical mean is within 0.02 of 1 with overwhelming margin.
    const int rows = 250, cols = 400;
    const double gain = 3.7e-4;
    const Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(rows, cols);
    const auto h = sample_rician(rows, cols, 0.0, ones, gain, rng);
    const double mean_power = h.squaredNorm() / (gain * rows * cols);
    CHECK(mean_power == Catch::Approx(1.0).margin(0.02));
  }

  SECTION("finite K keeps unit mean entry power") {
    const int rows = 250, cols = 400;
    const Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(rows, cols);
    const auto h = sample_rician(rows, cols, 2.0, ones, 1.0, rng);
    const double mean_power = h.squaredNorm() / (rows * cols);
    CHECK(mean_power == Catch::Approx(1.0).margin(0.02));
  }

  SECTION("shape validation") {
    CHECK_THROWS_AS(sample_rician(4, 2, 1.0, los, 1.0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_rician(3, 2, -0.5, los, 1.0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_rician(3, 2, 1.0, los, 0.0, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("rng stream is deterministic and well formed") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(a.normal() == b.normal());
  CHECK(a.cgauss() == b.cgauss());
  CHECK(a.uniform() != c.uniform());
}

TEST_CASE("scenario synthesis") {
  ScenarioConfig cfg;
  cfg.seed = 7;

  const ChannelSet ch = build_scenario_channels(cfg);

  SECTION("shapes and noise floor") {
    CHECK(ch.bs_ris.rows() == 100);
    CHECK(ch.bs_ris.cols() == 8);
    REQUIRE(ch.direct_ir.size() == 2);
    REQUIRE(ch.ris_ir.size() == 2);
    REQUIRE(ch.direct_er.size() == 2);
    REQUIRE(ch.ris_er.size() == 2);
    CHECK(ch.direct_ir[0].size() == 8);
    CHECK(ch.ris_ir[0].size() == 100);
    CHECK(ch.ris_target.size() == 100);
    CHECK(ch.target_sensor.size() == 10);
    CHECK(ch.noise_power == Catch::Approx(1e-12).epsilon(1e-12));
  }

  SECTION("steering outputs are unit modulus") {
    for (int i = 0; i < ch.ris_target.size(); ++i)
      CHECK(std::abs(ch.ris_target[i]) == Catch::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < ch.target_sensor.size(); ++i)
      CHECK(std::abs(ch.target_sensor[i]) == Catch::Approx(1.0).epsilon(1e-12));
  }

  SECTION("same seed reproduces the drop, another seed does not") {
    const ChannelSet ch2 = build_scenario_channels(cfg);
    CHECK((ch.bs_ris - ch2.bs_ris).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ch.ris_ir[1] - ch2.ris_ir[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ch.direct_er[0] - ch2.direct_er[0]).cwiseAbs().maxCoeff() == 0.0);

    ScenarioConfig other = cfg;
    other.seed = 8;
    const ChannelSet ch3 = build_scenario_channels(other);
    CHECK((ch.bs_ris - ch3.bs_ris).cwiseAbs().maxCoeff() > 0.0);
  }

  SECTION("large-scale power roughly matches the BS-RIS path gain") {
    const double g = path_gain(30.0, cfg.exponents.bs_ris, cfg.ref_gain_db);
    const double mean_entry = ch.bs_ris.squaredNorm() / (100.0 * 8.0);
    CHECK(mean_entry / g > 0.75);
    CHECK(mean_entry / g < 1.25);
  }

  SECTION("direct links are much weaker than the two-hop legs") {
    // exponent 3.6 over ~58 m versus 2.2 over ~50 m
    const double direct = ch.direct_ir[0].squaredNorm() / 8.0;
    const double cascade = ch.ris_ir[0].squaredNorm() / 100.0;
    CHECK(direct < cascade);
  }

  SECTION("config validation") {
    ScenarioConfig bad = cfg;
    bad.n_tx = 0;
    CHECK_THROWS_AS(build_scenario_channels(bad), std::invalid_argument);
    bad = cfg;
    bad.target.range_m = -5.0;
    CHECK_THROWS_AS(build_scenario_channels(bad), std::invalid_argument);
    bad = cfg;
    bad.exponents.bs_user = 0.0;
    CHECK_THROWS_AS(build_scenario_channels(bad), std::invalid_argument);
  }
}

TEST_CASE("complex lifting round trip") {
  Eigen::VectorXcd v(3);
  v << cxd(1.0, -2.0), cxd(0.5, 0.25), cxd(-3.0, 4.0);
  const Eigen::VectorXd r = lift_complex(v);
  REQUIRE(r.size() == 6);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == -2.0);  // interleaved (re, im) pairs
  CHECK(r[4] == -3.0);
  const Eigen::VectorXcd back = unlift_complex(r);
  CHECK((back - v).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd odd(3);
  odd << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(unlift_complex(odd), std::invalid_argument);
}
