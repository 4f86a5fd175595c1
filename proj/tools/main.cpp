#include "cli.hpp"

int main(int argc, char** argv) { return ddpglab::cli::parse_and_dispatch(argc, argv); }
