// Acceptance gate. Populated as modules land.
