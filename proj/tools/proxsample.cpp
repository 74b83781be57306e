// SPDX-License-Identifier: Apache-2.0

#include "proxsampler/cli.hpp"

int main(int argc, char** argv) { return proxsampler::cli::run_cli(argc, argv); }
