#pragma once

#include <string>
#include <vector>

#include "vfrl/common.hpp"

namespace vfrl {

// One executed episode: measured positions, applied controls, realized
// stage costs, all indexed by control step. faulted marks a trial that
// stopped early because the plant diverged; it is kept in memory and in
// the report but its rows never enter the training set implicitly.
struct TrialLog {
  int episode = 0;
  Mat q;     // T x dq, measured positions
  Mat u;     // T x du, applied controls
  Vec cost;  // T
  bool faulted = false;

  int steps() const { return static_cast<int>(q.rows()); }
  double total_cost() const { return cost.sum(); }
};

// Round-trip text format, one row per control step across all episodes:
//   episode,t,q_1..q_dq,u_1..u_du,cost
// Values are written with %.17g so a read-back is bit-exact. A nonempty
// meta string is written as a leading "# ..." provenance line; readers
// skip any number of leading '#' lines.
void write_trials_csv(const std::string& path,
                      const std::vector<TrialLog>& logs,
                      const std::string& meta = "");
std::vector<TrialLog> read_trials_csv(const std::string& path);

std::string trials_csv_header(int dq, int du);

}  // namespace vfrl
