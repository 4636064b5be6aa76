const window = { document: { write: function (html) { return html; } } };

function dump(classFunction, pref) {
  window.document.write("<b>" + pref + classFunction.name + "</b> <br/>");
  const keys = Object.keys(classFunction);
  if (keys.length > 0 && keys[0] !== "0") {
    for (const prop of keys) {
      dump(classFunction[prop], pref + classFunction.name + ".");
    }
  }
}

module.exports = { dump };
