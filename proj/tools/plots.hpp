#pragma once

// Minimal static SVG renderings of the CSV outputs.

#include <string>
#include <vector>

#include "gresnet/lmi.hpp"

namespace gresnet::plots {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // scatter instead of polyline
};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

// Discs drawn as circles centred on the real axis.
std::string disc_chart(const std::string& title, const std::vector<GershgorinDisc>& discs);

std::string histogram(const std::string& title, const std::vector<double>& values,
                      std::size_t bins = 40);

// Values inside [Q1 - f IQR, Q3 + f IQR]; display only.
std::vector<double> clip_by_quartiles(std::vector<double> values, double factor);

}  // namespace gresnet::plots
