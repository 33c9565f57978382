#pragma once

#include <string>
#include <vector>

#include "mqn/config.hpp"

namespace mqn {

// Plain string table: emitted as CSV and as aligned text.
struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
  std::string text() const;
};

// Computed factors from the config's imperfection budgets beside the bundled
// reference values. ids: s2 s4 s5 s6 s7 s8 s9. Throws std::invalid_argument
// on an unknown id or an invalid budget (the message names the field).
std::vector<Table> theory_tables(const RunConfig& c, const std::string& id);

// |computed - quoted| <= quoted error
bool within(double computed, double value, double error);

}  // namespace mqn
