"""Parser builders for each CLI subcommand."""
