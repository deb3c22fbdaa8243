#include "commands.hpp"

int main(int argc, char** argv) { return arrayscat::cli::run(argc, argv); }
