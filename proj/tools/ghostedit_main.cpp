// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "ghostedit/cli.hpp"

int main(int argc, char** argv) {
    return ghostedit::cli::run(argc, argv, std::cout, std::cerr);
}
