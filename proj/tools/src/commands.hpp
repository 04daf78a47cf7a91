#pragma once

#include <iosfwd>
#include <vector>

#include "options.hpp"

namespace relground::cli {

struct RunContext {
    std::ostream& log;
};

/// gen-data, gen-demos, train, explain, essence, predict-pose, eval, plot.
const std::vector<CommandSpec>& commands();

}  // namespace relground::cli
