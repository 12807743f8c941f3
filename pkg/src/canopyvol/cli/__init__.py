"""canopyvol CLI package."""
