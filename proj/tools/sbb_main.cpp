// CLI entry point; subcommands are wired up as the modules land.
int main() {
    return 0;
}
