// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#include "umbe/cli.hpp"

int main(int argc, char** argv) { return umbe::run_cli(argc, argv); }
