#include "gatelab/pool.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gatelab {

const std::string& Task::gold() const {
  if (exec_output) return *exec_output;
  assert(claimed_output);
  return *claimed_output;
}

std::optional<std::int64_t> Pool::insert(Task t) {
  t.id = next_id_++;
  tasks_.push_back(std::move(t));
  if (static_cast<std::int64_t>(tasks_.size()) <= capacity_) return std::nullopt;
  const std::int64_t evicted = tasks_.front().id;
  tasks_.pop_front();
  return evicted;
}

std::vector<Task> Pool::sample_batch(int b, std::int64_t current_step, Rng& rng) const {
  if (tasks_.empty()) throw EmptyPool();
  assert(b > 0);

  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(b));
  for (std::size_t i = 0; i < tasks_.size() && chosen.size() < static_cast<std::size_t>(b); ++i)
    if (tasks_[i].step == current_step) chosen.push_back(i);

  if (tasks_.size() < static_cast<std::size_t>(b)) {
    // Pool smaller than the batch: top up with replacement.
    while (chosen.size() < static_cast<std::size_t>(b))
      chosen.push_back(static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(tasks_.size()) - 1)));
  } else {
    std::vector<std::size_t> rest;
    rest.reserve(tasks_.size());
    for (std::size_t i = 0; i < tasks_.size(); ++i)
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
    while (chosen.size() < static_cast<std::size_t>(b)) {
      const std::size_t pick = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(rest.size()) - 1));
      chosen.push_back(rest[pick]);
      rest[pick] = rest.back();
      rest.pop_back();
    }
  }

  std::vector<Task> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(tasks_[i]);
  return out;
}

namespace {

std::string field_or_dash(const std::optional<std::string>& f) { return f ? *f : "-"; }

std::optional<std::string> dash_to_field(std::string s) {
  if (s == "-") return std::nullopt;
  return s;
}

}  // namespace

void Pool::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write pool snapshot: " + path);
  for (const Task& t : tasks_) {
    assert(t.program_text.find('\t') == std::string::npos &&
           t.program_text.find('\n') == std::string::npos);
    os << t.id << '\t' << t.program_text << '\t' << t.x << '\t' << t.y << '\t'
       << field_or_dash(t.exec_output) << '\t' << field_or_dash(t.claimed_output) << '\t'
       << (t.exec_ok ? 1 : 0) << '\t' << t.step << '\n';
  }
}

Pool Pool::load(const std::string& path, std::int64_t capacity) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read pool snapshot: " + path);
  Pool pool(capacity);
  std::string line;
  std::int64_t max_id = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (f.size() != 8) throw std::runtime_error("malformed pool snapshot line: " + line);
    Task t;
    t.id = std::stoll(f[0]);
    t.program_text = f[1];
    t.expr = parse(t.program_text);
    t.x = std::stoll(f[2]);
    t.y = std::stoll(f[3]);
    t.exec_output = dash_to_field(f[4]);
    t.claimed_output = dash_to_field(f[5]);
    t.exec_ok = f[6] == "1";
    t.step = std::stoll(f[7]);
    max_id = std::max(max_id, t.id);
    pool.tasks_.push_back(std::move(t));
  }
  pool.next_id_ = max_id + 1;
  return pool;
}

double eligibility(const StepStats& stats) {
  if (stats.proposed <= 0) throw std::invalid_argument("eligibility needs at least one proposal");
  return static_cast<double>(stats.admitted) / static_cast<double>(stats.proposed);
}

}  // namespace gatelab
