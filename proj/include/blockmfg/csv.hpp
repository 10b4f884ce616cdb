#pragma once

// Minimal CSV emission/parsing for the experiment outputs. Numbers are
// printed with %.12g so reruns are byte-identical and round-trips are exact
// at the precision the reports carry.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blockmfg/common.hpp"

namespace blockmfg {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct CsvWriter {
  std::ostringstream out;

  explicit CsvWriter(const std::vector<std::string>& header) { write_row(header); }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ",";
      out << cells[i];
    }
    out << "\n";
  }

  std::string str() const { return out.str(); }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << out.str();
  }
};

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.emplace_back();
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) rows.back().push_back(cell);
    if (!line.empty() && line.back() == ',') rows.back().push_back("");
  }
  return rows;
}

}  // namespace blockmfg
