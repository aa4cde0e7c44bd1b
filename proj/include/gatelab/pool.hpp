#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gatelab/expr.hpp"
#include "gatelab/rng.hpp"

namespace gatelab {

// A pooled training task. Valid tasks carry the executor output as gold;
// leaked invalid ones carry the proposer's claimed output instead — the only
// label that exists for them.
struct Task {
  std::int64_t id = 0;
  std::string program_text;
  std::optional<Expr> expr;  // parsed text; absent only for unparseable records
  std::int64_t x = 0, y = 0;
  std::optional<std::string> exec_output;     // o*, present iff exec_ok
  std::optional<std::string> claimed_output;  // proposer's claim
  bool exec_ok = false;
  std::int64_t step = 0;  // admission step

  const std::string& gold() const;  // exec_output if present, else claimed
};

struct EmptyPool : std::runtime_error {
  EmptyPool() : std::runtime_error("sample_batch on an empty pool") {}
};

// Bounded FIFO replay buffer. Ids are assigned by a monotone counter;
// overflow evicts the oldest id.
class Pool {
 public:
  explicit Pool(std::int64_t capacity) : capacity_(capacity) {}

  // Takes ownership, assigns the next id, returns the evicted id if the
  // capacity bound forced one out.
  std::optional<std::int64_t> insert(Task t);

  // Batch of b tasks: every task admitted at current_step first (up to b, in
  // id order), then a uniform fill without replacement from the rest. When
  // the pool holds fewer than b tasks the fill draws with replacement.
  std::vector<Task> sample_batch(int b, std::int64_t current_step, Rng& rng) const;

  std::size_t size() const { return tasks_.size(); }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t next_id() const { return next_id_; }
  void set_next_id(std::int64_t id) { next_id_ = id; }

  auto begin() const { return tasks_.begin(); }
  auto end() const { return tasks_.end(); }

  // Tab-separated snapshot, one task per line:
  //   id  program_text  x  y  exec_output|-  claimed_output|-  exec  step
  // Round-trips bit-exactly. Program texts never contain tabs or newlines
  // (enforced on save).
  void save(const std::string& path) const;
  static Pool load(const std::string& path, std::int64_t capacity);

 private:
  std::deque<Task> tasks_;
  std::int64_t capacity_;
  std::int64_t next_id_ = 1;
};

struct StepStats {
  int proposed = 0;
  int admitted = 0;
};

// Fraction of this step's proposals that entered the pool.
double eligibility(const StepStats& stats);

}  // namespace gatelab
