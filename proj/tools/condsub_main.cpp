// SPDX-License-Identifier: Apache-2.0
#include "condsub/harness.hpp"

int main(int argc, char** argv) { return condsub::run_cli(argc, argv); }
