const T = (key: string): string => {
  return key
}

const dialog = {
  showMessageBox(options: object): any {
    return Promise.resolve({ response: 0 })
  }
}

const shell = {
  openExternal(url: string): boolean {
    return url.length > 0
  }
}

const handler = (msg: string) => {
  if (msg === 'NPM is not installed') {
    dialog.showMessageBox({
      title: T('TIPS_ERROR'),
      message: T('TIPS_INSTALL_NODE_AND_RELOAD_PICGO'),
      buttons: ['Yes']
    }).then((res) => {
      if (res.response === 0) {
        shell.openExternal('https://nodejs.org/')
      }})}}

export { handler }
