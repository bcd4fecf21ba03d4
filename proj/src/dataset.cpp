#include "vfrl/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vfrl {

namespace {

void append_g17(std::string& out, double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view tok, int line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw std::runtime_error("trials csv: bad number at line " +
                             std::to_string(line_no) + ": '" +
                             std::string(tok) + "'");
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string trials_csv_header(int dq, int du) {
  std::string h = "episode,t";
  for (int d = 1; d <= dq; ++d) h += ",q_" + std::to_string(d);
  for (int d = 1; d <= du; ++d) h += ",u_" + std::to_string(d);
  h += ",cost";
  return h;
}

void write_trials_csv(const std::string& path,
                      const std::vector<TrialLog>& logs,
                      const std::string& meta) {
  require(!logs.empty(), "write_trials_csv: no episodes");
  const int dq = static_cast<int>(logs[0].q.cols());
  const int du = static_cast<int>(logs[0].u.cols());
  std::string out;
  if (!meta.empty()) {
    require(meta.find('\n') == std::string::npos,
            "write_trials_csv: meta must be one line");
    out += "# " + meta + "\n";
  }
  out += trials_csv_header(dq, du);
  out += '\n';
  for (const TrialLog& log : logs) {
    require(log.q.cols() == dq && log.u.cols() == du,
            "write_trials_csv: inconsistent dims across episodes");
    require(log.q.rows() == log.u.rows() && log.q.rows() == log.cost.size(),
            "write_trials_csv: inconsistent step counts");
    for (int t = 0; t < log.steps(); ++t) {
      out += std::to_string(log.episode);
      out += ',';
      out += std::to_string(t);
      for (int d = 0; d < dq; ++d) {
        out += ',';
        append_g17(out, log.q(t, d));
      }
      for (int d = 0; d < du; ++d) {
        out += ',';
        append_g17(out, log.u(t, d));
      }
      out += ',';
      append_g17(out, log.cost(t));
      out += '\n';
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << out;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<TrialLog> read_trials_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string line;
  do {  // leading '#' lines carry provenance, not data
    if (!std::getline(f, line))
      throw std::runtime_error("trials csv: empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (!line.empty() && line[0] == '#');

  auto head = split_csv(line);
  require(head.size() >= 4 && head[0] == "episode" && head[1] == "t" &&
              head.back() == "cost",
          "trials csv: unrecognized header: " + line);
  int dq = 0, du = 0;
  for (std::size_t i = 2; i + 1 < head.size(); ++i) {
    std::string expect_q = "q_" + std::to_string(dq + 1);
    std::string expect_u = "u_" + std::to_string(du + 1);
    if (head[i] == expect_q && du == 0)
      ++dq;
    else if (head[i] == expect_u)
      ++du;
    else
      throw std::runtime_error("trials csv: unexpected column '" +
                               std::string(head[i]) + "'");
  }
  require(dq >= 1 && du >= 1, "trials csv: need q_* and u_* columns");

  struct Row {
    int episode, t;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto toks = split_csv(line);
    if (toks.size() != static_cast<std::size_t>(2 + dq + du + 1))
      throw std::runtime_error("trials csv: wrong column count at line " +
                               std::to_string(line_no));
    Row r;
    r.episode = static_cast<int>(parse_double(toks[0], line_no));
    r.t = static_cast<int>(parse_double(toks[1], line_no));
    for (std::size_t i = 2; i < toks.size(); ++i)
      r.vals.push_back(parse_double(toks[i], line_no));
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), "trials csv: no data rows");

  std::vector<TrialLog> logs;
  std::size_t i = 0;
  while (i < rows.size()) {
    int ep = rows[i].episode;
    if (!logs.empty())
      require(ep > logs.back().episode,
              "trials csv: episodes out of order at episode " +
                  std::to_string(ep));
    std::size_t j = i;
    while (j < rows.size() && rows[j].episode == ep) {
      require(rows[j].t == static_cast<int>(j - i),
              "trials csv: non-contiguous t in episode " + std::to_string(ep));
      ++j;
    }
    TrialLog log;
    log.episode = ep;
    const int T = static_cast<int>(j - i);
    log.q.resize(T, dq);
    log.u.resize(T, du);
    log.cost.resize(T);
    for (int t = 0; t < T; ++t) {
      const auto& v = rows[i + t].vals;
      for (int d = 0; d < dq; ++d) log.q(t, d) = v[d];
      for (int d = 0; d < du; ++d) log.u(t, d) = v[dq + d];
      log.cost(t) = v[dq + du];
    }
    logs.push_back(std::move(log));
    i = j;
  }
  return logs;
}

}  // namespace vfrl
