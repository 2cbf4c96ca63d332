// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cli.hpp"

int main(int argc, char** argv) { return lodistort::cli::run(argc, argv); }
