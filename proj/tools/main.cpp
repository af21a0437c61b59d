#include "multihop/corpus_io.hpp"

int main(int argc, char** argv) { return multihop::run_cli(argc, argv); }
