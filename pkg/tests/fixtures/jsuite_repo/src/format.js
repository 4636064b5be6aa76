/**
 * Greet a person by name.
 *
 * @param name - who to greet
 * @returns the greeting line
 */
function greet(name) {
  const line = "hello, " + name + "!";
  return line;
}

module.exports = { greet };
