#include "yieldcast/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace yieldcast {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Generic: return "Generic";
    case ErrorCode::UnclosedBracket: return "UnclosedBracket";
    case ErrorCode::UnknownCharacter: return "UnknownCharacter";
    case ErrorCode::UnbalancedBranch: return "UnbalancedBranch";
    case ErrorCode::UnmatchedRingClosure: return "UnmatchedRingClosure";
    case ErrorCode::DanglingBond: return "DanglingBond";
    case ErrorCode::EmptyComponentList: return "EmptyComponentList";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::InconsistentWidth: return "InconsistentWidth";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingCompound: return "MissingCompound";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotScalarLoss: return "NotScalarLoss";
    case ErrorCode::NondeterministicFunction: return "NondeterministicFunction";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableYield: return "UnparseableYield";
    case ErrorCode::InvalidRatio: return "InvalidRatio";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::UnknownPair: return "UnknownPair";
    case ErrorCode::DuplicateCondition: return "DuplicateCondition";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::ZeroOptimal: return "ZeroOptimal";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::DegenerateActual: return "DegenerateActual";
    case ErrorCode::TooFewPartitions: return "TooFewPartitions";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    // Input format problems.
    case ErrorCode::MalformedCsv:
    case ErrorCode::MissingColumn:
    case ErrorCode::UnparseableYield:
    case ErrorCode::InconsistentWidth:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::DuplicateKey:
    case ErrorCode::BadMagic:
    case ErrorCode::VersionMismatch:
    case ErrorCode::InvalidRatio:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnclosedBracket:
    case ErrorCode::UnknownCharacter:
    case ErrorCode::UnbalancedBranch:
    case ErrorCode::UnmatchedRingClosure:
    case ErrorCode::DanglingBond:
      return 2;
    // Missing or insufficient data.
    case ErrorCode::MissingCompound:
    case ErrorCode::EmptyDataset:
    case ErrorCode::EmptySplit:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyInput:
    case ErrorCode::EmptyComponentList:
    case ErrorCode::EmptyGrid:
    case ErrorCode::Empty:
    case ErrorCode::TooSmall:
    case ErrorCode::TooFewGroups:
    case ErrorCode::TooFewPartitions:
      return 3;
    // Unknown entity.
    case ErrorCode::UnknownPair:
      return 4;
    default:
      return 1;
  }
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // Rejection sampling; rejects at most bound-1 of every 2^64 draws.
  std::uint64_t threshold = -bound % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::next_normal() {
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - next_unit();
  double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::next_trunc_normal(double stddev, double clip) {
  for (;;) {
    double z = next_normal();
    if (std::abs(z) <= clip) return z * stddev;
  }
}

void run_parallel(std::size_t n_tasks, unsigned max_threads,
                  const std::function<void(std::size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  unsigned n_threads = std::min<unsigned>(max_threads == 0 ? 1 : max_threads,
                                          hw == 0 ? 1 : hw);
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, n_tasks == 0 ? 1 : n_tasks));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(n_threads);
  std::atomic<std::size_t> next{0};
  for (unsigned t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n_tasks) break;
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace yieldcast
