// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "gs4d/cli.hpp"

int main(int argc, char** argv) { return gs4d::run_cli(argc, argv, std::cout, std::cerr); }
