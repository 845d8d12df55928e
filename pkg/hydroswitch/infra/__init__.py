"""Infrastructure helpers: settings, logging and the event bus."""
