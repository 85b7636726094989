#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace yieldcast {

// Every failure mode named by the public API. Codes group into the CLI's
// exit-code classes via exit_code_for().
enum class ErrorCode {
  Generic,
  // smiles
  UnclosedBracket,
  UnknownCharacter,
  UnbalancedBranch,
  UnmatchedRingClosure,
  DanglingBond,
  EmptyComponentList,
  EmptyCorpus,
  SequenceTooLong,
  // descriptors
  MalformedCsv,
  InconsistentWidth,
  NonFiniteValue,
  DuplicateKey,
  MissingCompound,
  EmptyInput,
  LengthMismatch,
  // tensor
  ShapeMismatch,
  NonFinite,
  NotScalarLoss,
  NondeterministicFunction,
  // model
  InvalidConfig,
  EmptyDataset,
  Io,
  BadMagic,
  VersionMismatch,
  EmptyGrid,
  // data
  MissingColumn,
  UnparseableYield,
  InvalidRatio,
  TooSmall,
  TooFewGroups,
  EmptySplit,
  // condopt
  UnknownPair,
  DuplicateCondition,
  Empty,
  ZeroOptimal,
  BadK,
  DegenerateActual,
  // cli
  TooFewPartitions,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Exit-code classes: 0 success, 1 generic, 2 input format, 3 missing data,
// 4 unknown entity.
int exit_code_for(ErrorCode code);

// 64-bit finalizer used for all seed derivation in the project. Fixed
// constants; output is identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hash a seed together with stream labels, e.g. (seed, fold) or
// (seed, step, site, sample).
inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }
template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
  return mix_seed(splitmix64(seed ^ splitmix64(next)), rest...);
}

// Deterministic RNG built on the splitmix64 stream. Unlike std::mt19937 +
// std::distributions, every draw is specified here, so sequences are
// bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via Box-Muller (cosine branch only, one draw per pair of
  // uniforms, no cached state).
  double next_normal();

  // normal(0, stddev) truncated to [-clip*stddev, clip*stddev] by resampling.
  double next_trunc_normal(double stddev, double clip);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Runs fn(task) for task in [0, n_tasks) on up to max_threads workers.
// Tasks must be independent; any exception of the batch is rethrown.
void run_parallel(std::size_t n_tasks, unsigned max_threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace yieldcast
