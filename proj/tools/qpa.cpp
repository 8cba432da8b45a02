#include <iostream>

#include "qpa/cli.hpp"

int main(int argc, char** argv) {
  return qpa::cli::main_entry(argc, argv, std::cout, std::cerr);
}
