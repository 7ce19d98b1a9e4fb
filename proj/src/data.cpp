#include "cegmix/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace cegmix {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("bad integer for " + what + ": '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad number for " + what + ": '" + s + "'");
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

void validate(const TransitionData& data) {
  if (data.successes.size() != data.totals.size() ||
      static_cast<Eigen::Index>(data.ids.size()) != data.successes.size())
    throw DataError("transition data fields disagree in length");
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (data.totals[i] < 0 || data.successes[i] < 0 ||
        data.successes[i] > data.totals[i])
      throw DataError("situation " + data.ids[static_cast<std::size_t>(i)] +
                      ": need 0 <= successes <= totals");
  }
}

void validate(const HoldingData& data) {
  if (data.ids.size() != data.times.size())
    throw DataError("holding data fields disagree in length");
  for (std::size_t i = 0; i < data.times.size(); ++i) {
    if (data.times[i].size() == 0)
      throw DataError("edge " + data.ids[i] + " has no observations");
    if (!(data.times[i].array() > 0.0).all())
      throw NonPositiveTime("edge " + data.ids[i] +
                            " has a non-positive holding time");
  }
}

TransitionData read_transition_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + " is empty");

  TransitionData data;
  std::vector<int> succ, tot;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw DataError(path + ": expected 3 fields, got line '" + line + "'");
    data.ids.push_back(fields[0]);
    succ.push_back(static_cast<int>(parse_int(fields[1], "successes")));
    tot.push_back(static_cast<int>(parse_int(fields[2], "totals")));
  }
  data.successes = Eigen::Map<Eigen::VectorXi>(succ.data(),
                                               static_cast<Eigen::Index>(succ.size()));
  data.totals = Eigen::Map<Eigen::VectorXi>(tot.data(),
                                            static_cast<Eigen::Index>(tot.size()));
  validate(data);
  return data;
}

void write_transition_csv(const TransitionData& data, const std::string& path) {
  validate(data);
  auto out = open_output(path);
  out << "situation_id,successes,totals\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out << data.ids[static_cast<std::size_t>(i)] << ',' << data.successes[i]
        << ',' << data.totals[i] << '\n';
}

HoldingData read_holding_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + " is empty");

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<long long, double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw DataError(path + ": expected 3 fields, got line '" + line + "'");
    if (!rows.count(fields[0])) order.push_back(fields[0]);
    rows[fields[0]].emplace_back(parse_int(fields[1], "obs_index"),
                                 parse_double(fields[2], "holding_time"));
  }

  HoldingData data;
  for (const auto& id : order) {
    auto& obs = rows[id];
    std::sort(obs.begin(), obs.end());
    Eigen::VectorXd t(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j)
      t[static_cast<Eigen::Index>(j)] = obs[j].second;
    data.ids.push_back(id);
    data.times.push_back(std::move(t));
  }
  validate(data);
  return data;
}

void write_holding_csv(const HoldingData& data, const std::string& path) {
  validate(data);
  auto out = open_output(path);
  out << "edge_id,obs_index,holding_time\n";
  out.precision(17);
  for (std::size_t i = 0; i < data.times.size(); ++i)
    for (Eigen::Index j = 0; j < data.times[i].size(); ++j)
      out << data.ids[i] << ',' << j << ',' << data.times[i][j] << '\n';
}

}  // namespace cegmix
