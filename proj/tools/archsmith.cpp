// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "archsmith/cli.hpp"

int main(int argc, char** argv) { return archsmith::run_cli(argc, argv, std::cout, std::cerr); }
