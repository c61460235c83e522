#pragma once

#include <string>
#include <vector>

#include "locind/estimation.hpp"

namespace locind {

struct PlotSeries {
    std::string label;
    StepCurve curve;
    std::string color = "#1f77b4";
};

/// Standalone SVG of step curves over [0, horizon], with an optional shaded band.
std::string step_plot_svg(const std::vector<PlotSeries>& series, double horizon, const std::string& title,
                          const std::string& y_label, const ContrastBand* band = nullptr);

}  // namespace locind
