#include "emojivec/cli.hpp"

int main(int argc, char** argv) { return emojivec::cli::run(argc, argv); }
