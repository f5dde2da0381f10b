#include "emotionbox/cli.hpp"

int main(int argc, char** argv) { return ebox::cli::run(argc, argv); }
