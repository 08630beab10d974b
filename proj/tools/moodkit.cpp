#include <iostream>

#include "moodkit/pipeline/cli.hpp"

int main(int argc, char** argv) { return moodkit::pipeline::run_cli(argc, argv, std::cout, std::cerr); }
