#include "commands.hpp"

int main(int argc, char** argv) { return ringmod::cli::main_entry(argc, argv); }
