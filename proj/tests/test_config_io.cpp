#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <limits>

#include "mpfusion/config.hpp"
#include "mpfusion/io.hpp"

using namespace mpfusion;

TEST(ParseKeyValues, CommentsBlankLinesAndOrder) {
  const KeyValues kv = parse_key_values("# header\n\nT = 20\nalgorithms = spf, mpf  # trailing\nT=30\n");
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"T", "20"}));
  EXPECT_EQ(kv[1].second, "spf, mpf");
  EXPECT_EQ(kv[2].second, "30");
}

TEST(ParseKeyValues, MalformedLineIsReported) {
  try {
    parse_key_values("T = 1\nnot a pair\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "line 2");
  }
}

TEST(ApplySettings, AllKeys) {
  ExperimentConfig c;
  apply_settings(c, parse_key_values("d_x = 6\nd_theta_g = 3\ntheta_full = 1,2,3,4,5\nsigma_u2 = 0.5\n"
                                     "sigma_v2 = 0.25\nT = 7\nK = 3\nparticles_per_unit = 10\nrealizations = 4\n"
                                     "algorithms = mpf-fusion dapf\nmaster_seed = 99\nsigma_rw2 = 0\n"
                                     "pd_floor = 1e-6\n"));
  EXPECT_EQ(c.d_x, 6u);
  EXPECT_EQ(c.d_theta_g, 3u);
  EXPECT_EQ(c.theta_full[4], 5.0);
  EXPECT_EQ(c.sigma_u2, 0.5);
  EXPECT_EQ(c.sigma_v2, 0.25);
  EXPECT_EQ(c.T, 7u);
  EXPECT_EQ(c.K, 3u);
  EXPECT_EQ(c.particles_per_unit, 10u);
  EXPECT_EQ(c.realizations, 4u);
  EXPECT_EQ(c.algorithms, (std::vector<Algorithm>{Algorithm::mpf_fusion, Algorithm::dapf}));
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_EQ(c.sigma_rw2, 0.0);
  EXPECT_EQ(c.pd_floor, 1e-6);
  EXPECT_NO_THROW(c.validate());

  apply_settings(c, {{"K", "auto"}});
  EXPECT_EQ(c.resolved_K(), 3u);
}

TEST(ApplySettings, RejectsUnknownAndMalformed) {
  ExperimentConfig c;
  auto field_of = [&](const std::string& k, const std::string& v) {
    try {
      apply_settings(c, {{k, v}});
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("bogus", "1"), "bogus");
  EXPECT_EQ(field_of("T", "-3"), "T");
  EXPECT_EQ(field_of("T", "ten"), "T");
  EXPECT_EQ(field_of("sigma_u2", "x"), "sigma_u2");
  EXPECT_EQ(field_of("theta_full", "1,2"), "theta_full");
  EXPECT_EQ(field_of("algorithms", "spf,nope"), "algorithms");
}

TEST(SplitOverride, Cases) {
  EXPECT_EQ(split_override("T=5"), (std::pair<std::string, std::string>{"T", "5"}));
  EXPECT_THROW(split_override("T5"), ConfigError);
}

TEST(ReadTextFile, MissingFileNamesPath) {
  try {
    read_text_file("/nonexistent/dir/cfg.txt");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "/nonexistent/dir/cfg.txt");
  }
}

TEST(Describe, RoundTripsThroughApplySettings) {
  ExperimentConfig c;
  c.d_x = 8;
  c.sigma_rw2 = 0.1 + 0.2;
  c.algorithms = {Algorithm::mpf, Algorithm::spf};
  c.validate();
  ExperimentConfig back;
  apply_settings(back, describe(c));
  back.validate();
  EXPECT_EQ(describe(back), describe(c));
  EXPECT_EQ(back.sigma_rw2, c.sigma_rw2);
}

TEST(ParseFusionProblem, ReadsLocalsAndPrior) {
  const FusionProblem p = parse_fusion_problem(
      "dim = 2\nprior_mean = 0 0\nprior_cov = 2 0; 0 2\n"
      "local_mean = 1, 1\nlocal_cov = 1 0 0 1\nlocal_mean = 3 3\nlocal_cov = 1 0 0 1\n");
  ASSERT_EQ(p.locals.size(), 2u);
  EXPECT_EQ(p.prior.cov()(1, 1), 2.0);
  EXPECT_EQ(p.locals[1].mean()[0], 3.0);
}

TEST(ParseFusionProblem, RejectsBadShapes) {
  EXPECT_THROW(parse_fusion_problem("dim = 2\nprior_mean = 0\nprior_cov = 1 0 0 1\nlocal_mean = 0 0\n"
                                    "local_cov = 1 0 0 1\n"),
               ConfigError);
  EXPECT_THROW(parse_fusion_problem("dim = 1\nprior_mean = 0\nprior_cov = 1\n"), ConfigError);
  EXPECT_THROW(parse_fusion_problem("dim = 1\nprior_mean = 0\nprior_cov = 1\nlocal_mean = 0\n"), ConfigError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) {
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Csv, HeadersAndRows) {
  ResultTable t;
  t.details.push_back({Algorithm::mpf_fusion, 3, {2, 0.25, 0.5, true}});
  t.summary.push_back({Algorithm::spf, 1, 1.5, 2.5, 0});
  EXPECT_EQ(details_csv(t), "algorithm,realization,t,mse_state,mse_param,failed\nmpf-fusion,3,2,0.25,0.5,1\n");
  EXPECT_EQ(summary_csv(t), "algorithm,t,avg_mse_state,avg_mse_param,n_failed\nspf,1,1.5,2.5,0\n");

  Trajectory tr;
  tr.states.resize(1, 2);
  tr.states << 1, 2;
  tr.observations.resize(1, 2);
  tr.observations << 3, 4;
  EXPECT_EQ(trajectory_csv(tr), "t,x_0,x_1,y_0,y_1\n1,1,2,3,4\n");
}
