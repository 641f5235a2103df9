#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qvpo/config.hpp"
#include "qvpo/errors.hpp"
#include "qvpo/metrics.hpp"
#include "qvpo/model_io.hpp"
#include "qvpo/plot.hpp"
#include "qvpo/trainer.hpp"

using namespace qvpo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("qvpo_test_" + tag + "_" +
                                   std::to_string(::getpid()) + "_" +
                                   std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig tiny_bandit_config(const fs::path& out_dir) {
  TrainConfig config = TrainConfig::defaults_for("bandit");
  config.total_steps = 260;
  config.warmup_steps = 50;
  config.batch_size = 16;
  config.n_d = 4;
  config.n_e = 2;
  config.hidden_dim = 16;
  config.diffusion_steps = 5;
  config.eval_interval = 100;
  config.eval_episodes = 4;
  config.k_eval = 2;
  config.buffer_capacity = 1000;
  config.out_dir = out_dir.string();
  return config;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("per-env defaults and key parsing") {
  const TrainConfig bandit = TrainConfig::defaults_for("bandit");
  CHECK(bandit.eval_episodes == 1000);
  CHECK(bandit.transform == "qadv");
  CHECK(bandit.omega_ent == 0.01);
  CHECK(bandit.diffusion_steps == 20);
  const TrainConfig pendulum = TrainConfig::defaults_for("pendulum");
  CHECK(pendulum.gamma == 0.99);
  CHECK(pendulum.k_b == 4);
  CHECK(pendulum.k_t == 2);
  CHECK_THROWS_AS(TrainConfig::defaults_for("walker"), ConfigError);

  TrainConfig config = bandit;
  set_config_key(config, "seed", "17");
  set_config_key(config, "omega_ent", "0.5");
  CHECK(config.seed == 17);
  CHECK(config.omega_ent == 0.5);
  CHECK_THROWS_AS(set_config_key(config, "bogus_key", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_key(config, "total_steps", "ten"), ConfigError);
}

TEST_CASE("config files are key=value lines with comments") {
  const fs::path dir = fresh_dir("cfg");
  {
    std::ofstream out(dir / "run.cfg");
    out << "# pendulum run\n"
        << "env = pendulum\n"
        << "seed = 3\n"
        << "total_steps = 1234  # short\n";
  }
  const TrainConfig config = load_config_file(dir / "run.cfg");
  CHECK(config.env == "pendulum");
  CHECK(config.seed == 3);
  CHECK(config.total_steps == 1234);
  // per-env defaults applied before the file's explicit keys
  CHECK(config.eval_interval == TrainConfig::defaults_for("pendulum").eval_interval);

  {
    std::ofstream out(dir / "bad.cfg");
    out << "env pendulum\n";
  }
  CHECK_THROWS_AS(load_config_file(dir / "bad.cfg"), ConfigError);
  CHECK_THROWS_AS(load_config_file(dir / "missing.cfg"), IoError);
}

TEST_CASE("metrics rows survive a write/read round trip") {
  const fs::path dir = fresh_dir("metrics");
  MetricsRow row;
  row.step = 100;
  row.episodes = 42;
  row.eval_return_mean = 1.234567891;
  row.eval_return_std = 0.5;
  row.policy_loss = 3.25;
  row.critic_loss = 0.125;
  row.mean_positive_weight = 2.5;
  row.zero_weight_fraction = 0.25;
  row.mode_coverage = {0.1, 0.2, 0.3};
  {
    MetricsWriter writer(dir / "m.csv", true);
    writer.write(row);
  }
  const auto rows = read_metrics(dir / "m.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].step == 100);
  CHECK(rows[0].eval_return_mean == doctest::Approx(1.234567891).epsilon(1e-9));
  CHECK(rows[0].mode_coverage[2] == doctest::Approx(0.3));
}

TEST_CASE("malformed metrics rows are reported with their line") {
  const fs::path dir = fresh_dir("badmetrics");
  {
    std::ofstream out(dir / "m.csv");
    out << "step,episodes,eval_return_mean,eval_return_std,policy_loss,"
           "critic_loss,mean_positive_weight,zero_weight_fraction\n";
    out << "100,1,2,3,4,5,6,7\n";
    out << "200,1,2,3\n";
  }
  CHECK_THROWS_WITH_AS(read_metrics(dir / "m.csv"), doctest::Contains(":3:"),
                       IoError);
}

TEST_CASE("zero training steps produce a header-only metrics file") {
  const fs::path dir = fresh_dir("zerosteps");
  TrainConfig config = tiny_bandit_config(dir);
  config.total_steps = 0;
  const fs::path metrics = train(config);
  const std::string contents = slurp(metrics);
  CHECK(read_metrics(metrics).empty());
  CHECK(std::count(contents.begin(), contents.end(), '\n') == 1);
}

TEST_CASE("metrics rows appear per eval interval plus the final step") {
  const fs::path dir = fresh_dir("rows");
  const TrainConfig config = tiny_bandit_config(dir);
  const auto rows = read_metrics(train(config));
  REQUIRE(rows.size() == 3);  // steps 100, 200, and the final 260
  CHECK(rows[0].step == 100);
  CHECK(rows[1].step == 200);
  CHECK(rows[2].step == 260);
  CHECK(rows[2].episodes == 260);  // bandit episodes are single steps
  for (const auto& row : rows) {
    REQUIRE(row.mode_coverage.size() == 3);
    CHECK(row.zero_weight_fraction >= 0.0);
    CHECK(row.zero_weight_fraction <= 1.0);
  }
}

TEST_CASE("identical config and seed give byte-identical metrics") {
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  TrainConfig config = tiny_bandit_config(dir_a);
  config.seed = 11;
  const fs::path metrics_a = train(config);
  config.out_dir = dir_b.string();
  const fs::path metrics_b = train(config);
  const std::string a = slurp(metrics_a);
  CHECK(!a.empty());
  CHECK(a == slurp(metrics_b));
}

TEST_CASE("changing the seed changes the run") {
  const fs::path dir_a = fresh_dir("seed_a");
  const fs::path dir_b = fresh_dir("seed_b");
  TrainConfig config = tiny_bandit_config(dir_a);
  config.seed = 1;
  const std::string a = slurp(train(config));
  config.seed = 2;
  config.out_dir = dir_b.string();
  const std::string b = slurp(train(config));
  CHECK(a != b);
}

TEST_CASE("a train run saves a model that reloads bit-exactly") {
  const fs::path dir = fresh_dir("model");
  TrainConfig config = tiny_bandit_config(dir);
  train(config);
  const ModelBundle bundle = load_model(dir / "model.json");
  CHECK(bundle.env == "bandit");
  CHECK(bundle.diffusion_steps == config.diffusion_steps);

  ModelBundle reloaded;
  const fs::path copy = dir / "model_copy.json";
  save_model(bundle, copy);
  reloaded = load_model(copy);
  for (std::size_t l = 0; l < bundle.predictor.net.layers.size(); ++l) {
    CHECK((reloaded.predictor.net.layers[l].w.array() ==
           bundle.predictor.net.layers[l].w.array())
              .all());
    CHECK((reloaded.predictor.net.layers[l].b.array() ==
           bundle.predictor.net.layers[l].b.array())
              .all());
  }
  CHECK_THROWS_AS(load_model(dir / "nosuch.json"), IoError);
}

TEST_CASE("evaluation is deterministic and leaves the networks untouched") {
  Rng init(3);
  const NoisePredictor predictor = make_noise_predictor(1, 2, 8, init);
  const TwinCritic critic = make_twin_critic(1, 2, 8, init);
  const DiffusionSchedule schedule = build_schedule(5);
  const NoisePredictor copy = predictor;
  BanditEnv env;

  const EvalResult a =
      evaluate(predictor, schedule, critic, env, 20, 2, Rng(5));
  const EvalResult b =
      evaluate(predictor, schedule, critic, env, 20, 2, Rng(5));
  CHECK(a.mean_return == b.mean_return);
  CHECK(a.std_return == b.std_return);
  CHECK(a.first_actions.size() == 20);
  for (std::size_t l = 0; l < copy.net.layers.size(); ++l)
    CHECK((predictor.net.layers[l].w.array() == copy.net.layers[l].w.array()).all());
}

TEST_CASE("uniform baseline on the bandit matches the analytic mean") {
  BanditEnv env;
  const EvalResult baseline = uniform_policy_baseline(env, 3000, Rng(7));
  // Each peak integrates to (w / sigma) * (in-box Gaussian mass); the
  // per-coordinate spread of the as-written exponent is sqrt(sigma).
  const double s = std::sqrt(0.1);
  auto phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
  double expected = 0.0;
  for (const Eigen::Vector2d& mu : env.params().mean) {
    double in_box = 1.0;
    for (int d = 0; d < 2; ++d)
      in_box *= phi((2.0 - mu[d]) / s) - phi((-2.0 - mu[d]) / s);
    expected += 15.0 * in_box / 16.0;
  }
  CHECK(std::abs(baseline.mean_return - expected) < 0.3);
  CHECK(baseline.std_return > 1.0);
}

TEST_CASE("K=32 evaluation returns dominate K=1 on a trained bandit policy") {
  const fs::path dir = fresh_dir("kcontrast");
  TrainConfig config = tiny_bandit_config(dir);
  config.total_steps = 1200;
  config.eval_interval = 1200;
  train(config);
  const ModelBundle bundle = load_model(dir / "model.json");
  const DiffusionSchedule schedule = build_schedule(
      bundle.diffusion_steps, bundle.beta_min, bundle.beta_max);
  BanditEnv env;
  const int episodes = 400;
  const EvalResult wide = evaluate(bundle.predictor, schedule, bundle.critic,
                                   env, episodes, 32, Rng(1));
  const EvalResult narrow = evaluate(bundle.predictor, schedule, bundle.critic,
                                     env, episodes, 1, Rng(2));
  const double se = std::sqrt(wide.std_return * wide.std_return / episodes +
                              narrow.std_return * narrow.std_return / episodes);
  CHECK(wide.mean_return >= narrow.mean_return - 3.0 * se);
}

TEST_CASE("an untrained K=1 policy scores in the uniform ballpark") {
  Rng init(9);
  const NoisePredictor predictor = make_noise_predictor(1, 2, 16, init);
  const TwinCritic critic = make_twin_critic(1, 2, 16, init);
  const DiffusionSchedule schedule = build_schedule(20);
  BanditEnv env;
  const EvalResult eval =
      evaluate(predictor, schedule, critic, env, 500, 1, Rng(13));
  const EvalResult baseline = uniform_policy_baseline(env, 3000, Rng(7));
  CHECK(eval.mean_return > baseline.mean_return / 3.0);
  CHECK(eval.mean_return < baseline.mean_return * 3.0);
}

TEST_CASE("the learning-curve SVG tracks the data") {
  const fs::path dir = fresh_dir("plot");
  {
    MetricsWriter writer(dir / "m.csv", false);
    MetricsRow row;
    row.step = 100;
    row.eval_return_mean = 1.0;
    row.eval_return_std = 0.5;
    writer.write(row);
    row.step = 200;
    row.eval_return_mean = 3.0;
    row.eval_return_std = 0.25;
    writer.write(row);
  }
  write_learning_curve_svg(dir / "m.csv", dir / "curve.svg");
  const std::string svg = slurp(dir / "curve.svg");

  // two vertices on the mean polyline
  const auto poly_pos = svg.find("<polyline");
  REQUIRE(poly_pos != std::string::npos);
  const auto points_start = svg.find("points=\"", poly_pos) + 8;
  const auto points_end = svg.find('"', points_start);
  std::stringstream points(svg.substr(points_start, points_end - points_start));
  int vertices = 0;
  std::string token;
  while (points >> token) vertices += 1;
  CHECK(vertices == 2);

  // axis ranges: data min/max padded by 5%
  auto attr = [&](const std::string& name) {
    const auto pos = svg.find(name + "=\"");
    REQUIRE(pos != std::string::npos);
    const auto start = pos + name.size() + 2;
    return std::stod(svg.substr(start, svg.find('"', start) - start));
  };
  CHECK(attr("data-x-min") == doctest::Approx(100.0 - 5.0).epsilon(1e-5));
  CHECK(attr("data-x-max") == doctest::Approx(200.0 + 5.0).epsilon(1e-5));
  CHECK(attr("data-y-min") == doctest::Approx(0.5 - 0.05 * 2.75).epsilon(1e-5));
  CHECK(attr("data-y-max") == doctest::Approx(3.25 + 0.05 * 2.75).epsilon(1e-5));
}

TEST_CASE("plotting rejects empty or malformed inputs") {
  const fs::path dir = fresh_dir("plotbad");
  {
    MetricsWriter writer(dir / "empty.csv", false);
  }
  CHECK_THROWS_AS(
      write_learning_curve_svg(dir / "empty.csv", dir / "out.svg"), IoError);
  {
    std::ofstream out(dir / "bad.csv");
    out << "step,episodes,eval_return_mean,eval_return_std,policy_loss,"
           "critic_loss,mean_positive_weight,zero_weight_fraction\n";
    out << "1,2,3,oops,5,6,7,8\n";
  }
  CHECK_THROWS_WITH_AS(
      write_learning_curve_svg(dir / "bad.csv", dir / "out.svg"),
      doctest::Contains(":2:"), IoError);
}

}  // TEST_SUITE
