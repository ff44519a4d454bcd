#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace uavisac {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment with a fixed-size observation and an action box [-1, 1]^A.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
};

/// One-step bandit: s ~ U[-1, 1], reward 1 - (a - s / 2)^2, episodes of
/// `length` independent draws. The optimal policy a = s / 2 earns 1 per step.
class ToyEnv : public Environment {
 public:
  explicit ToyEnv(int length = 20) : length_(length) {}
  int observation_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  std::vector<double> reset(std::uint64_t seed) override {
    rng_.seed(seed);
    t_ = 0;
    draw();
    return {state_};
  }
  StepResult step(std::span<const double> action) override {
    const double a = action[0];
    const double r = 1.0 - (a - 0.5 * state_) * (a - 0.5 * state_);
    ++t_;
    draw();
    return {{state_}, r, t_ >= length_};
  }
  static constexpr double optimal_reward() { return 1.0; }

 private:
  void draw() { state_ = std::uniform_real_distribution<double>(-1.0, 1.0)(rng_); }
  int length_;
  int t_ = 0;
  double state_ = 0.0;
  std::mt19937_64 rng_;
};

}  // namespace uavisac
