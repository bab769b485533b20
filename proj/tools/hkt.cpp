// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "rigl/cli/commands.hpp"

int main(int argc, char** argv) {
    return rigl::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
