#include "test_support.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "slowtrack/pipeline.hpp"

namespace slowtrack::testing {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("slowtrack-test-" + std::to_string(::getpid()) + "-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<TrackSession> random_sessions(int count, int frames, int dim, std::uint64_t seed,
                                          int edge) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<TrackSession> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    s.edge = edge;
    for (int f = 0; f < frames; ++f) {
      Eigen::VectorXd x(dim);
      for (int i = 0; i < dim; ++i) x[i] = normal(rng);
      s.patches.push_back(x);
    }
  }
  return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

tracker::TrackerConfig small_tracker_config() {
  tracker::TrackerConfig cfg;
  cfg.particles = 200;
  cfg.optimizer.maxIter = 60;
  cfg.classifier.maxIter = 100;
  return cfg;
}

const stack::StackedModel& small_model() {
  static const stack::StackedModel model = [] {
    const auto cfg = small_tracker_config();
    const auto s8 = pipeline::synthetic_sessions(cfg.layer1.edge, 300, 5, 1.5, 8.0, 11);
    const auto l1 = pipeline::train_first_layer(s8, cfg, 1);
    const auto s14 = pipeline::synthetic_sessions(cfg.layer2.edge, 300, 5, 1.5, 8.0, 12);
    const auto l2 = pipeline::train_second_layer(s14, l1.weights, cfg, 2);
    return pipeline::assemble(l1.weights, l2.weights, cfg);
  }();
  return model;
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace slowtrack::testing
